#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ovfl/matrix.hpp"

namespace ovfl {

/// Fully connected network parameters. weights[i] is (layer_sizes[i+1] x
/// layer_sizes[i]); biases[i] has layer_sizes[i+1] entries. Hidden layers are
/// ReLU, the output layer is linear.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<DenseMatrix> weights;
  std::vector<std::vector<double>> biases;

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  size_t param_count() const;
};

/// Everything forward() saw, kept for the backward pass: the input plus each
/// layer's pre-activation and post-activation values.
struct ActivationTape {
  DenseMatrix input;
  std::vector<DenseMatrix> pre;
  std::vector<DenseMatrix> post;

  const DenseMatrix& output() const { return post.back(); }
};

/// Scaled-uniform init: weights U(-sqrt(6/(in+out)), +sqrt(6/(in+out))),
/// biases zero. Deterministic per seed.
MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

ActivationTape forward(const MlpParams& params, const DenseMatrix& input);

/// Mean over every element: (1/(M*d)) * sum (pred - label)^2.
double mse_loss(const DenseMatrix& pred, const DenseMatrix& labels);
/// d(mse_loss)/d(pred) = (2/(M*d)) * (pred - label).
DenseMatrix mse_grad(const DenseMatrix& pred, const DenseMatrix& labels);

/// Reverse-mode gradients. Returns parameter gradients (same shapes as
/// params) and the gradient w.r.t. the network input, which lets the head
/// gradient chain into a feature extractor.
std::pair<MlpParams, DenseMatrix> backward(const MlpParams& params,
                                           const ActivationTape& tape,
                                           const DenseMatrix& output_grad);

/// params - eta * grads, element-wise.
MlpParams sgd_step(const MlpParams& params, const MlpParams& grads, double eta);
void sgd_step_inplace(MlpParams& params, const MlpParams& grads, double eta);

/// Clamp every parameter into [-bound, bound].
void clip_params(MlpParams& params, double bound);

MlpParams zeros_like(const MlpParams& params);
double grad_norm(const MlpParams& grads);

/// Layer by layer, weights row-major then bias.
void flatten_into(const MlpParams& params, std::vector<double>& out);
std::vector<double> flatten(const MlpParams& params);
double max_param_abs_diff(const MlpParams& a, const MlpParams& b);

}  // namespace ovfl
