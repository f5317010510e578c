#pragma once

#include <cstdint>
#include <vector>

#include "ovfl/mlp.hpp"
#include "ovfl/rng.hpp"
#include "ovfl/split_model.hpp"

namespace ovfl {

/// Empirical stand-ins for the analysis constants: L_hat bounds the observed
/// partial-gradient norms, rho_hat the element gap between gradients with and
/// without quantization, beta_hat the largest model element, epsilon_hat the
/// gradient-variation / model-variation ratio across local iterations of the
/// same round, and D the flattened model length.
struct AssumptionProbe {
  double L_hat = 0.0;
  double rho_hat = 0.0;
  double beta_hat = 0.0;
  double epsilon_hat = 0.0;
  long long D = 0;
};

/// Accumulates probe statistics while a trainer runs. Rho compares each
/// applied gradient against the same-iteration gradient recomputed with the
/// identity quantizer; epsilon compares identity-path gradients across local
/// iterations (all pairs up to 100 per party per round, sampled beyond that).
class GradientTrace {
 public:
  GradientTrace() : pair_rng_(0) {}
  explicit GradientTrace(std::uint64_t pair_seed) : enabled_(true), pair_rng_(pair_seed) {}

  bool enabled() const { return enabled_; }

  void observe_model(const SplitModel& model);
  void begin_round(int num_parties);
  void observe_iteration(int party, const MlpParams& grad_applied,
                         const MlpParams& grad_plain, const MlpParams& params);
  void end_round();

  AssumptionProbe probe() const { return probe_; }

 private:
  bool enabled_ = false;
  AssumptionProbe probe_;
  Rng pair_rng_;
  // Per-party history of (identity-path gradient, parameters) this round.
  std::vector<std::vector<std::vector<double>>> round_grads_;
  std::vector<std::vector<std::vector<double>>> round_params_;

  static constexpr int kMaxPairsPerParty = 100;
};

}  // namespace ovfl
