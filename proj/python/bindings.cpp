#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>

#include "ovfl/analysis.hpp"
#include "ovfl/config.hpp"
#include "ovfl/environment.hpp"
#include "ovfl/mlp.hpp"
#include "ovfl/presets.hpp"
#include "ovfl/quantizer.hpp"
#include "ovfl/runner.hpp"

namespace py = pybind11;

namespace {

ovfl::DenseMatrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D float64 array");
  ovfl::DenseMatrix m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
  return m;
}

py::array_t<double> to_array(const ovfl::DenseMatrix& m) {
  py::array_t<double> arr({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
  return arr;
}

py::tuple quantized_tuple(const ovfl::QuantizedTensor& q) {
  return py::make_tuple(to_array(q.reconstructed), q.payload_bits, q.side_info_bits);
}

class PyMlp {
 public:
  PyMlp(const std::vector<int>& layer_sizes, std::uint64_t seed)
      : params_(ovfl::init_mlp(layer_sizes, seed)) {}

  py::array_t<double> forward(const py::array_t<double>& input) const {
    return to_array(ovfl::forward(params_, to_matrix(input)).output());
  }
  std::vector<int> layer_sizes() const { return params_.layer_sizes; }
  size_t num_params() const { return params_.param_count(); }

 private:
  ovfl::MlpParams params_;
};

class PyEnvironment {
 public:
  PyEnvironment(const std::string& config_json, std::uint64_t seed)
      : cfg_(ovfl::config_from_json_text(config_json)),
        env_(ovfl::EnvironmentSim::random_walk(
            cfg_.world, ovfl::derive_seed(seed, 11), cfg_.mobility_rate)) {}

  py::tuple next_round() {
    ovfl::RoundDataset ds = env_.next_round();
    py::list features;
    for (const auto& f : ds.features) features.append(to_array(f));
    return py::make_tuple(features, to_array(ds.labels), ds.train_rows, ds.test_rows);
  }

 private:
  ovfl::RunConfig cfg_;
  ovfl::EnvironmentSim env_;
};

int run_experiment_text(const std::string& config_json, const std::string& output_dir,
                        std::optional<std::uint64_t> seed) {
  return ovfl::run_experiment(ovfl::experiment_from_json_text(config_json), output_dir,
                              seed);
}

int run_experiment_file(const std::string& path, const std::string& output_dir,
                        std::optional<std::uint64_t> seed) {
  return ovfl::run_experiment(ovfl::load_experiment(path), output_dir, seed);
}

int run_preset(const std::string& name, const std::string& output_dir,
               std::optional<std::uint64_t> seed) {
  return ovfl::run_experiment(ovfl::preset_experiment(name), output_dir, seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online split-network training simulator for cooperative spectrum sensing";

  py::class_<PyMlp>(m, "Mlp")
      .def(py::init<const std::vector<int>&, std::uint64_t>(), py::arg("layer_sizes"),
           py::arg("seed"))
      .def("forward", &PyMlp::forward, py::arg("input"))
      .def_property_readonly("layer_sizes", &PyMlp::layer_sizes)
      .def_property_readonly("num_params", &PyMlp::num_params);

  m.def("mse_loss",
        [](const py::array_t<double>& pred, const py::array_t<double>& labels) {
          return ovfl::mse_loss(to_matrix(pred), to_matrix(labels));
        },
        py::arg("pred"), py::arg("labels"));

  m.def("quantize_uniform",
        [](const py::array_t<double>& x, int bits) {
          return quantized_tuple(ovfl::quantize_uniform(to_matrix(x), bits));
        },
        py::arg("x"), py::arg("bits"),
        "Uniform scalar quantization; returns (reconstructed, payload_bits, side_info_bits)");
  m.def("quantize_hex",
        [](const py::array_t<double>& x, int bits) {
          return quantized_tuple(ovfl::quantize_hex(to_matrix(x), bits));
        },
        py::arg("x"), py::arg("bits"),
        "Hexagonal-lattice vector quantization of component pairs");

  py::class_<PyEnvironment>(m, "Environment")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("config_json"),
           py::arg("seed"))
      .def("next_round", &PyEnvironment::next_round,
           "Returns (feature_blocks, labels, train_rows, test_rows)");

  m.def("run_experiment", &run_experiment_text, py::arg("config_json"),
        py::arg("output_dir") = "", py::arg("seed") = py::none(),
        "Run an experiment from a JSON document; returns the process exit code");
  m.def("run_experiment_file", &run_experiment_file, py::arg("path"),
        py::arg("output_dir") = "", py::arg("seed") = py::none());
  m.def("preset_names", &ovfl::preset_names);
  m.def("run_preset", &run_preset, py::arg("name"), py::arg("output_dir") = "",
        py::arg("seed") = py::none());

  m.attr("__version__") = "0.1.0";
}
