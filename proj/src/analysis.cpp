#include "ovfl/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ovfl/errors.hpp"

namespace ovfl {

// ---------------------------------------------------------------- probes ---

void GradientTrace::observe_model(const SplitModel& model) {
  if (!enabled_) return;
  const std::vector<double> flat = flatten(model);
  probe_.D = static_cast<long long>(flat.size());
  for (double v : flat) probe_.beta_hat = std::max(probe_.beta_hat, std::abs(v));
}

void GradientTrace::begin_round(int num_parties) {
  if (!enabled_) return;
  round_grads_.assign(num_parties, {});
  round_params_.assign(num_parties, {});
}

void GradientTrace::observe_iteration(int party, const MlpParams& grad_applied,
                                      const MlpParams& grad_plain,
                                      const MlpParams& params) {
  if (!enabled_) return;
  probe_.L_hat = std::max(probe_.L_hat, grad_norm(grad_applied));
  probe_.rho_hat = std::max(probe_.rho_hat, max_param_abs_diff(grad_applied, grad_plain));
  for (const auto& w : params.weights)
    for (double v : w.data) probe_.beta_hat = std::max(probe_.beta_hat, std::abs(v));
  for (const auto& b : params.biases)
    for (double v : b) probe_.beta_hat = std::max(probe_.beta_hat, std::abs(v));
  round_grads_.at(party).push_back(flatten(grad_plain));
  round_params_.at(party).push_back(flatten(params));
}

namespace {

double vec_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

void GradientTrace::end_round() {
  if (!enabled_) return;
  for (size_t party = 0; party < round_grads_.size(); ++party) {
    const auto& grads = round_grads_[party];
    const auto& params = round_params_[party];
    const size_t n = grads.size();
    if (n < 2) continue;
    const size_t all_pairs = n * (n - 1) / 2;
    const auto consider = [&](size_t i, size_t j) {
      const double dp = vec_dist(params[i], params[j]);
      if (dp < 1e-15) return;
      probe_.epsilon_hat =
          std::max(probe_.epsilon_hat, vec_dist(grads[i], grads[j]) / dp);
    };
    if (all_pairs <= static_cast<size_t>(kMaxPairsPerParty)) {
      for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) consider(i, j);
    } else {
      for (int s = 0; s < kMaxPairsPerParty; ++s) {
        const size_t i = pair_rng_.uniform_index(n);
        size_t j = pair_rng_.uniform_index(n - 1);
        if (j >= i) ++j;
        consider(std::min(i, j), std::max(i, j));
      }
    }
  }
  round_grads_.clear();
  round_params_.clear();
}

AssumptionProbe probe_assumptions(const GradientTrace& trace) {
  if (!trace.enabled())
    throw ConfigError("probe_assumptions: gradient tracing was not enabled for this run");
  return trace.probe();
}

// -------------------------------------------------------------- hindsight ---

PooledSet build_pooled(const std::vector<RoundDataset>& rounds) {
  if (rounds.empty()) throw ConfigError("build_pooled: no rounds");
  const size_t parties = rounds.front().features.size();
  PooledSet pooled;
  std::vector<DenseMatrix> label_blocks;
  for (size_t k = 0; k < parties; ++k) {
    std::vector<DenseMatrix> blocks;
    blocks.reserve(rounds.size());
    for (const auto& r : rounds) blocks.push_back(slice_rows(r.features[k], 0, r.train_rows));
    pooled.features.push_back(vstack(blocks));
  }
  label_blocks.reserve(rounds.size());
  for (const auto& r : rounds) label_blocks.push_back(r.train_labels());
  pooled.labels = vstack(label_blocks);
  return pooled;
}

double pooled_loss(const SplitModel& model, const PooledSet& pooled) {
  return split_loss(model, pooled.features, pooled.labels);
}

namespace {

void apply_grads(SplitModel& model, const SplitGrads& grads, double eta) {
  sgd_step_inplace(model.head, grads.head, eta);
  for (int k = 0; k < model.num_parties(); ++k)
    sgd_step_inplace(model.extractors[k], grads.extractors[k], eta);
}

double total_grad_norm(const SplitGrads& grads) {
  double acc = grad_norm(grads.head) * grad_norm(grads.head);
  for (const auto& e : grads.extractors) acc += grad_norm(e) * grad_norm(e);
  return std::sqrt(acc);
}

/// Descent-only GD from one start. The step is accepted only if the pooled
/// loss does not increase, halving eta until it does; the achieved loss is
/// therefore non-increasing in the budget.
double descend(SplitModel& model, const PooledSet& pooled, int budget, double eta0) {
  double loss = pooled_loss(model, pooled);
  if (!std::isfinite(loss)) throw DivergenceError(0, "pooled loss non-finite at start");
  double eta = eta0;
  for (int it = 0; it < budget; ++it) {
    auto [grads, current] = joint_grads(model, pooled.features, pooled.labels);
    (void)current;
    if (total_grad_norm(grads) < 1e-6) break;
    bool accepted = false;
    while (eta >= 1e-14) {
      SplitModel candidate = model;
      apply_grads(candidate, grads, eta);
      const double cand_loss = pooled_loss(candidate, pooled);
      if (std::isfinite(cand_loss) && cand_loss <= loss) {
        model = std::move(candidate);
        loss = cand_loss;
        eta = std::min(eta * 1.25, eta0 * 16.0);
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // no descent direction at any feasible step
  }
  return loss;
}

}  // namespace

SplitModel hindsight_optimum(const std::vector<RoundDataset>& rounds,
                             const SplitArch& arch, int budget, std::uint64_t seed,
                             const std::vector<SplitModel>& warm_starts, double eta0,
                             double* achieved_loss) {
  if (budget < 1) throw ConfigError("hindsight budget must be >= 1");
  const PooledSet pooled = build_pooled(rounds);

  SplitModel best = init_split_model(arch, seed);
  double best_loss = descend(best, pooled, budget, eta0);
  for (const auto& start : warm_starts) {
    SplitModel candidate = start;
    const double loss = descend(candidate, pooled, budget, eta0);
    if (loss < best_loss) {
      best_loss = loss;
      best = std::move(candidate);
    }
  }
  if (achieved_loss) *achieved_loss = best_loss;
  return best;
}

// ----------------------------------------------------------------- regret ---

RegretRecord regret_curve(const RunLog& run, const SplitModel& comparator,
                          const std::vector<RoundDataset>& rounds) {
  if (run.rounds.size() != rounds.size())
    throw ShapeError("regret_curve: run log and datasets disagree on round count");
  RegretRecord rec;
  double cum = 0.0;
  for (size_t t = 0; t < rounds.size(); ++t) {
    const double learner = run.rounds[t].train_loss_pre;
    const double comp =
        split_loss(comparator, rounds[t].train_features(), rounds[t].train_labels());
    rec.learner_loss.push_back(learner);
    rec.comparator_loss.push_back(comp);
    cum += learner - comp;
    rec.cumulative_regret.push_back(cum);
    rec.average_regret.push_back(cum / static_cast<double>(t + 1));
  }
  return rec;
}

}  // namespace ovfl
