#pragma once

#include <cstdint>
#include <vector>

#include "ovfl/mlp.hpp"

namespace ovfl {

/// Layer plan for one vertically split network: each of the K parties runs
/// its own extractor, the server concatenates the K embeddings and runs the
/// head. head_layers.front() must equal K * extractor output size.
struct SplitArch {
  std::vector<int> extractor_layers;  // input dim .. embedding dim
  std::vector<int> head_layers;       // K*embedding dim .. label dim
  int num_parties = 0;

  int embedding_dim() const { return extractor_layers.back(); }
  static SplitArch make(int feature_dim, const std::vector<int>& extractor_hidden,
                        int embedding_dim, const std::vector<int>& head_hidden,
                        int label_dim, int num_parties);
};

/// Head parameters plus one extractor per party. Flattening order is fixed:
/// head first, then extractors by party index; within a network layer by
/// layer, weights row-major then bias. Element d of the flattened vector is
/// the model coordinate used by the analysis probes.
struct SplitModel {
  MlpParams head;
  std::vector<MlpParams> extractors;

  int num_parties() const { return static_cast<int>(extractors.size()); }
  size_t param_count() const;
};

SplitModel init_split_model(const SplitArch& arch, std::uint64_t seed);

std::vector<double> flatten(const SplitModel& model);
void unflatten(SplitModel& model, const std::vector<double>& values);

/// Embeddings for every party, concatenated in party order.
std::vector<DenseMatrix> compute_embeddings(const SplitModel& model,
                                            const std::vector<DenseMatrix>& features);
/// Full-precision prediction: extractors -> concat -> head.
DenseMatrix split_forward(const SplitModel& model,
                          const std::vector<DenseMatrix>& features);
double split_loss(const SplitModel& model, const std::vector<DenseMatrix>& features,
                  const DenseMatrix& labels);

/// Gradients of the composite network for every party, all taken at the same
/// point.
struct SplitGrads {
  MlpParams head;
  std::vector<MlpParams> extractors;
};

/// Joint full-batch gradients plus the loss at the current parameters.
std::pair<SplitGrads, double> joint_grads(const SplitModel& model,
                                          const std::vector<DenseMatrix>& features,
                                          const DenseMatrix& labels);

/// One joint full-batch gradient step of the composite network (all parties
/// at once, no staleness). The centralized baseline's update.
void joint_sgd_step(SplitModel& model, const std::vector<DenseMatrix>& features,
                    const DenseMatrix& labels, double eta);

double max_param_abs_diff(const SplitModel& a, const SplitModel& b);
bool params_bitwise_equal(const SplitModel& a, const SplitModel& b);

}  // namespace ovfl
