#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ovfl/config.hpp"
#include "ovfl/presets.hpp"
#include "ovfl/runner.hpp"

using namespace ovfl;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("run_experiment writes one data row per round") {
  Experiment exp = experiment_from_json_text(R"({
    "T": 3, "seeds": [1],
    "world": {"slots_per_round": 8, "rss_per_slot": 6, "train_slots": 4,
              "test_slots": 4, "num_sus": 2},
    "extractor_hidden": [5], "embedding_dim": 3, "head_hidden": [4]
  })");
  const fs::path dir = fresh_dir("ovfl_runner_rows");
  REQUIRE(run_experiment(exp, dir.string()) == 0);
  const std::string body = read_file(dir / "ovfl-u32-E1-v1-N2-K2_seed1.csv");
  CHECK(body.rfind("round,train_loss,test_loss,bits_up,bits_down,cum_bits,wall_ms\n",
                   0) == 0);
  int newlines = 0;
  for (char ch : body)
    if (ch == '\n') ++newlines;
  CHECK(newlines == 4);  // header + 3 data rows
  CHECK(body.find("\r") == std::string::npos);
}

TEST_CASE("identical config and seed produce byte-identical CSVs") {
  const std::string text = R"({
    "T": 4, "seeds": [3],
    "world": {"slots_per_round": 8, "rss_per_slot": 6, "train_slots": 4,
              "test_slots": 4, "num_sus": 2},
    "extractor_hidden": [5], "embedding_dim": 3, "head_hidden": [4]
  })";
  const fs::path dir_a = fresh_dir("ovfl_runner_det_a");
  const fs::path dir_b = fresh_dir("ovfl_runner_det_b");
  REQUIRE(run_experiment(experiment_from_json_text(text), dir_a.string()) == 0);
  REQUIRE(run_experiment(experiment_from_json_text(text), dir_b.string()) == 0);
  const std::string name = "ovfl-u32-E1-v1-N2-K2_seed3.csv";
  CHECK(read_file(dir_a / name) == read_file(dir_b / name));
}

TEST_CASE("grid configs emit one CSV per cell and seed") {
  Experiment exp = experiment_from_json_text(R"({
    "T": 2, "seeds": [1, 2],
    "quantizer": {"bits_per_component": [2, 4, 32]},
    "world": {"slots_per_round": 8, "rss_per_slot": 6, "train_slots": 4,
              "test_slots": 4, "num_sus": 2},
    "extractor_hidden": [5], "embedding_dim": 3, "head_hidden": [4]
  })");
  const fs::path dir = fresh_dir("ovfl_runner_grid");
  REQUIRE(run_experiment(exp, dir.string()) == 0);
  int csvs = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".csv") ++csvs;
  CHECK(csvs == 6);
}

TEST_CASE("numeric divergence exits nonzero naming the round") {
  Experiment exp = experiment_from_json_text(R"({
    "T": 5, "seeds": [1], "eta": 1e9,
    "world": {"slots_per_round": 8, "rss_per_slot": 6, "train_slots": 4,
              "test_slots": 4, "num_sus": 2},
    "extractor_hidden": [5], "embedding_dim": 3, "head_hidden": [4]
  })");
  const fs::path dir = fresh_dir("ovfl_runner_div");
  CHECK(run_experiment(exp, dir.string()) == 2);
}

TEST_CASE("seed override replaces the configured seed list") {
  Experiment exp = experiment_from_json_text(R"({
    "T": 2, "seeds": [1, 2, 3],
    "world": {"slots_per_round": 8, "rss_per_slot": 6, "train_slots": 4,
              "test_slots": 4, "num_sus": 2},
    "extractor_hidden": [5], "embedding_dim": 3, "head_hidden": [4]
  })");
  const fs::path dir = fresh_dir("ovfl_runner_seed");
  REQUIRE(run_experiment(exp, dir.string(), std::uint64_t{42}) == 0);
  CHECK(fs::exists(dir / "ovfl-u32-E1-v1-N2-K2_seed42.csv"));
  CHECK_FALSE(fs::exists(dir / "ovfl-u32-E1-v1-N2-K2_seed1.csv"));
}

TEST_CASE("OVFL_OUTPUT_DIR supplies the default output directory") {
  const fs::path dir = fresh_dir("ovfl_runner_env");
  setenv("OVFL_OUTPUT_DIR", dir.string().c_str(), 1);
  Experiment exp = experiment_from_json_text(R"({
    "T": 2, "seeds": [1],
    "world": {"slots_per_round": 8, "rss_per_slot": 6, "train_slots": 4,
              "test_slots": 4, "num_sus": 2},
    "extractor_hidden": [5], "embedding_dim": 3, "head_hidden": [4]
  })");
  REQUIRE(run_experiment(exp) == 0);
  unsetenv("OVFL_OUTPUT_DIR");
  CHECK(fs::exists(dir / "ovfl-u32-E1-v1-N2-K2_seed1.csv"));
}

TEST_CASE("analysis-enabled runs emit regret, probes and hindsight CSVs") {
  Experiment exp = experiment_from_json_text(R"({
    "T": 4, "seeds": [1],
    "analysis": {"enabled": true, "trace_gradients": true, "hindsight_budget": 10},
    "world": {"slots_per_round": 8, "rss_per_slot": 6, "train_slots": 4,
              "test_slots": 4, "num_sus": 2},
    "extractor_hidden": [5], "embedding_dim": 3, "head_hidden": [4]
  })");
  const fs::path dir = fresh_dir("ovfl_runner_analysis");
  REQUIRE(run_experiment(exp, dir.string()) == 0);
  const std::string regret = read_file(dir / "regret.csv");
  CHECK(regret.rfind("tag,seed,round,learner_loss,comparator_loss,cum_regret,avg_regret\n",
                     0) == 0);
  int rows = 0;
  for (char ch : regret)
    if (ch == '\n') ++rows;
  CHECK(rows == 5);  // header + T rows
  CHECK(fs::exists(dir / "probes.csv"));
  CHECK(fs::exists(dir / "hindsight.csv"));
}

TEST_CASE("every preset expands and the bus preset wires the builtin traces") {
  for (const auto& name : preset_names()) {
    const Experiment exp = preset_experiment(name);
    CHECK(!exp.cells.empty());
    for (const auto& cell : exp.cells) CHECK(cell.output_dir == "out/" + name);
  }
  const Experiment bus = preset_experiment("fig12_bus_trace");
  REQUIRE(bus.cells.size() == 1);
  CHECK(bus.cells[0].trace_dir == "builtin:bus");
  CHECK(bus.cells[0].local_iterations == 4);
  CHECK(bus.cells[0].rounds == 100);
  CHECK(builtin_bus_traces().size() == 4);
  CHECK(builtin_bus_speeds().size() == 4);
}

TEST_CASE("bus-trace runs replay the routes deterministically") {
  RunConfig cfg = preset_experiment("fig12_bus_trace").cells[0];
  cfg.rounds = 3;
  cfg.seeds = {1};
  RunResult a = execute_run(cfg, 1, true);
  RunResult b = execute_run(cfg, 1, true);
  CHECK(params_bitwise_equal(a.final_model, b.final_model));
  for (size_t t = 0; t < a.rounds.size(); ++t)
    CHECK(a.rounds[t].labels.data == b.rounds[t].labels.data);
}
