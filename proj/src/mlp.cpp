#include "ovfl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ovfl/errors.hpp"
#include "ovfl/rng.hpp"

namespace ovfl {

size_t MlpParams::param_count() const {
  size_t n = 0;
  for (int i = 0; i < num_layers(); ++i) n += weights[i].size() + biases[i].size();
  return n;
}

MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw ConfigError("init_mlp: need at least input and output layer sizes");
  for (int s : layer_sizes)
    if (s < 1) throw ConfigError("init_mlp: layer size must be >= 1, got " + std::to_string(s));

  MlpParams p;
  p.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int in = layer_sizes[i];
    const int out = layer_sizes[i + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    DenseMatrix w(out, in);
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(out, 0.0);
  }
  return p;
}

ActivationTape forward(const MlpParams& params, const DenseMatrix& input) {
  if (input.cols != params.input_size())
    throw ShapeError("forward: input has " + std::to_string(input.cols) +
                     " cols, network expects " + std::to_string(params.input_size()));

  ActivationTape tape;
  tape.input = input;
  const DenseMatrix* cur = &tape.input;
  const int layers = params.num_layers();
  for (int i = 0; i < layers; ++i) {
    DenseMatrix z = matmul_a_bt(*cur, params.weights[i]);  // (M x out)
    const auto& bias = params.biases[i];
    for (int r = 0; r < z.rows; ++r) {
      double* zr = z.row(r);
      for (int c = 0; c < z.cols; ++c) zr[c] += bias[c];
    }
    tape.pre.push_back(z);
    if (i + 1 < layers) {
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;  // ReLU on hidden layers
    }
    tape.post.push_back(std::move(z));
    cur = &tape.post.back();
  }
  return tape;
}

double mse_loss(const DenseMatrix& pred, const DenseMatrix& labels) {
  if (!pred.same_shape(labels)) throw ShapeError("mse_loss: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - labels.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.data.size());
}

DenseMatrix mse_grad(const DenseMatrix& pred, const DenseMatrix& labels) {
  if (!pred.same_shape(labels)) throw ShapeError("mse_grad: shape mismatch");
  DenseMatrix g(pred.rows, pred.cols);
  const double scale = 2.0 / static_cast<double>(pred.data.size());
  for (size_t i = 0; i < pred.data.size(); ++i)
    g.data[i] = scale * (pred.data[i] - labels.data[i]);
  return g;
}

std::pair<MlpParams, DenseMatrix> backward(const MlpParams& params,
                                           const ActivationTape& tape,
                                           const DenseMatrix& output_grad) {
  const int layers = params.num_layers();
  if (static_cast<int>(tape.pre.size()) != layers)
    throw ShapeError("backward: tape does not match network depth");
  if (!output_grad.same_shape(tape.post.back()))
    throw ShapeError("backward: output_grad shape mismatch");

  MlpParams grads = zeros_like(params);
  DenseMatrix delta = output_grad;  // output layer is linear
  for (int i = layers - 1; i >= 0; --i) {
    const DenseMatrix& below = (i == 0) ? tape.input : tape.post[i - 1];
    grads.weights[i] = matmul_at_b(delta, below);
    auto& bg = grads.biases[i];
    for (int r = 0; r < delta.rows; ++r) {
      const double* dr = delta.row(r);
      for (int c = 0; c < delta.cols; ++c) bg[c] += dr[c];
    }
    DenseMatrix next = matmul(delta, params.weights[i]);  // (M x in)
    if (i > 0) {
      const DenseMatrix& pre = tape.pre[i - 1];
      for (size_t j = 0; j < next.data.size(); ++j)
        if (pre.data[j] <= 0.0) next.data[j] = 0.0;
    }
    delta = std::move(next);
  }
  return {std::move(grads), std::move(delta)};
}

MlpParams sgd_step(const MlpParams& params, const MlpParams& grads, double eta) {
  MlpParams out = params;
  sgd_step_inplace(out, grads, eta);
  return out;
}

void sgd_step_inplace(MlpParams& params, const MlpParams& grads, double eta) {
  if (params.layer_sizes != grads.layer_sizes)
    throw ShapeError("sgd_step: gradient shapes do not match parameters");
  for (int i = 0; i < params.num_layers(); ++i) {
    add_scaled(params.weights[i], grads.weights[i], -eta);
    auto& b = params.biases[i];
    const auto& g = grads.biases[i];
    for (size_t j = 0; j < b.size(); ++j) b[j] -= eta * g[j];
  }
}

void clip_params(MlpParams& params, double bound) {
  for (auto& w : params.weights)
    for (double& v : w.data) v = std::clamp(v, -bound, bound);
  for (auto& b : params.biases)
    for (double& v : b) v = std::clamp(v, -bound, bound);
}

MlpParams zeros_like(const MlpParams& params) {
  MlpParams z;
  z.layer_sizes = params.layer_sizes;
  for (int i = 0; i < params.num_layers(); ++i) {
    z.weights.emplace_back(params.weights[i].rows, params.weights[i].cols);
    z.biases.emplace_back(params.biases[i].size(), 0.0);
  }
  return z;
}

double grad_norm(const MlpParams& grads) {
  double acc = 0.0;
  for (const auto& w : grads.weights)
    for (double v : w.data) acc += v * v;
  for (const auto& b : grads.biases)
    for (double v : b) acc += v * v;
  return std::sqrt(acc);
}

void flatten_into(const MlpParams& params, std::vector<double>& out) {
  for (int i = 0; i < params.num_layers(); ++i) {
    out.insert(out.end(), params.weights[i].data.begin(), params.weights[i].data.end());
    out.insert(out.end(), params.biases[i].begin(), params.biases[i].end());
  }
}

std::vector<double> flatten(const MlpParams& params) {
  std::vector<double> out;
  out.reserve(params.param_count());
  flatten_into(params, out);
  return out;
}

double max_param_abs_diff(const MlpParams& a, const MlpParams& b) {
  if (a.layer_sizes != b.layer_sizes)
    throw ShapeError("max_param_abs_diff: layer sizes differ");
  double worst = 0.0;
  for (int i = 0; i < a.num_layers(); ++i) {
    worst = std::max(worst, max_abs_diff(a.weights[i], b.weights[i]));
    for (size_t j = 0; j < a.biases[i].size(); ++j)
      worst = std::max(worst, std::abs(a.biases[i][j] - b.biases[i][j]));
  }
  return worst;
}

}  // namespace ovfl
