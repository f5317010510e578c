#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ovfl/environment.hpp"
#include "ovfl/probes.hpp"
#include "ovfl/protocol.hpp"
#include "ovfl/split_model.hpp"

namespace ovfl {

/// Per-round metrics of one completed run.
struct RunLog {
  std::string tag;
  std::uint64_t seed = 0;
  std::vector<RoundMetrics> rounds;
};

/// Learner-vs-comparator loss sequences and the running regret they imply.
struct RegretRecord {
  std::vector<double> learner_loss;      // F_t at the round-start model
  std::vector<double> comparator_loss;   // F_t at the fixed comparator
  std::vector<double> cumulative_regret;
  std::vector<double> average_regret;    // cumulative / round
};

/// Every round's training rows pooled into one batch; the objective the
/// hindsight comparator minimizes. Means of per-round means equal the pooled
/// mean because every round contributes the same number of rows.
struct PooledSet {
  std::vector<DenseMatrix> features;  // per party
  DenseMatrix labels;
};

PooledSet build_pooled(const std::vector<RoundDataset>& rounds);
double pooled_loss(const SplitModel& model, const PooledSet& pooled);

/// Approximate fixed-in-hindsight minimizer of the pooled objective:
/// full-batch gradient descent with a line-checked (descent-only) step, run
/// from the seed's random init plus any warm starts; the best endpoint wins.
/// Stops early when the gradient norm drops below 1e-6.
SplitModel hindsight_optimum(const std::vector<RoundDataset>& rounds,
                             const SplitArch& arch, int budget, std::uint64_t seed,
                             const std::vector<SplitModel>& warm_starts = {},
                             double eta0 = 0.1, double* achieved_loss = nullptr);

/// Exact regret sequences for a completed run against a fixed comparator,
/// using the same loss and train rows as the learner's pre-update loss.
RegretRecord regret_curve(const RunLog& run, const SplitModel& comparator,
                          const std::vector<RoundDataset>& rounds);

/// Probe values accumulated by a traced run. Throws if tracing was off.
AssumptionProbe probe_assumptions(const GradientTrace& trace);

}  // namespace ovfl
