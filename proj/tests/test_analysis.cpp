#include <cmath>

#include "doctest.h"
#include "ovfl/analysis.hpp"
#include "ovfl/errors.hpp"
#include "ovfl/runner.hpp"

using namespace ovfl;

namespace {

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.world.slots_per_round = 8;
  cfg.world.rss_per_slot = 6;
  cfg.world.train_slots = 4;
  cfg.world.test_slots = 4;
  cfg.world.num_sus = 2;
  cfg.extractor_hidden = {5};
  cfg.embedding_dim = 3;
  cfg.head_hidden = {4};
  cfg.rounds = 10;
  cfg.eta = 1e-3;
  cfg.seeds = {1};
  return cfg;
}

}  // namespace

TEST_CASE("identity-quantizer trace probes rho_hat == 0 exactly") {
  RunConfig cfg = tiny_config();
  cfg.quantizer = {QuantKind::identity, 32};
  GradientTrace trace(99);
  execute_run(cfg, 1, false, &trace);
  const AssumptionProbe probe = probe_assumptions(trace);
  CHECK(probe.rho_hat == 0.0);
  CHECK(probe.L_hat > 0.0);
  CHECK(probe.beta_hat > 0.0);
  CHECK(probe.D > 0);
  CHECK(std::isfinite(probe.epsilon_hat));
}

TEST_CASE("epsilon_hat is zero when E=1 (no iteration pairs)") {
  RunConfig cfg = tiny_config();
  cfg.local_iterations = 1;
  GradientTrace trace(1);
  execute_run(cfg, 2, false, &trace);
  CHECK(probe_assumptions(trace).epsilon_hat == 0.0);
}

TEST_CASE("E>1 traces produce a finite positive epsilon_hat") {
  RunConfig cfg = tiny_config();
  cfg.local_iterations = 4;
  cfg.eta = 1e-2;
  GradientTrace trace(1);
  execute_run(cfg, 2, false, &trace);
  const AssumptionProbe probe = probe_assumptions(trace);
  CHECK(probe.epsilon_hat > 0.0);
  CHECK(std::isfinite(probe.epsilon_hat));
}

TEST_CASE("coarser quantization gives a larger rho_hat (paired seeds)") {
  RunConfig cfg = tiny_config();
  cfg.quantizer = {QuantKind::uniform_scalar, 2};
  GradientTrace coarse(5);
  execute_run(cfg, 7, false, &coarse);

  cfg.quantizer = {QuantKind::uniform_scalar, 8};
  GradientTrace fine(5);
  execute_run(cfg, 7, false, &fine);

  CHECK(probe_assumptions(coarse).rho_hat >= probe_assumptions(fine).rho_hat);
  CHECK(probe_assumptions(fine).rho_hat > 0.0);
}

TEST_CASE("probes are deterministic across identical traced runs") {
  RunConfig cfg = tiny_config();
  cfg.quantizer = {QuantKind::uniform_scalar, 3};
  GradientTrace a(5), b(5);
  execute_run(cfg, 9, false, &a);
  execute_run(cfg, 9, false, &b);
  const AssumptionProbe pa = probe_assumptions(a);
  const AssumptionProbe pb = probe_assumptions(b);
  CHECK(pa.L_hat == pb.L_hat);
  CHECK(pa.rho_hat == pb.rho_hat);
  CHECK(pa.beta_hat == pb.beta_hat);
  CHECK(pa.epsilon_hat == pb.epsilon_hat);
  CHECK(pa.D == pb.D);
}

TEST_CASE("weight clipping bounds beta_hat") {
  RunConfig cfg = tiny_config();
  cfg.weight_clip = 0.03;
  GradientTrace trace(2);
  execute_run(cfg, 3, false, &trace);
  CHECK(probe_assumptions(trace).beta_hat <= 0.03);
}

TEST_CASE("probe_assumptions rejects an untraced run") {
  GradientTrace off;
  CHECK_THROWS_AS(probe_assumptions(off), ConfigError);
}

TEST_CASE("hindsight optimum drives a realizable linear problem to ~zero loss") {
  // One party, pure linear extractor and head; labels generated by a fixed
  // linear map, so the pooled optimum achieves loss ~0.
  SplitArch arch = SplitArch::make(3, {}, 2, {}, 1, 1);
  Rng rng(11);
  std::vector<RoundDataset> rounds(1);
  RoundDataset& ds = rounds[0];
  ds.round_index = 1;
  ds.train_rows = 16;
  ds.test_rows = 0;
  DenseMatrix x(16, 3);
  for (double& v : x.data) v = rng.uniform(-1, 1);
  DenseMatrix y(16, 1);
  for (int r = 0; r < 16; ++r)
    y(r, 0) = 0.3 * x(r, 0) - 0.8 * x(r, 1) + 0.1 * x(r, 2);
  ds.features = {x};
  ds.labels = y;

  double achieved = 0.0;
  hindsight_optimum(rounds, arch, 600, 1, {}, 0.5, &achieved);
  CHECK(achieved < 1e-3);
}

TEST_CASE("doubling the hindsight budget never increases the achieved loss") {
  RunConfig cfg = tiny_config();
  RunResult run = execute_run(cfg, 4, true);
  double short_loss = 0.0, long_loss = 0.0;
  hindsight_optimum(run.rounds, cfg.arch(), 15, 4, {}, 0.1, &short_loss);
  hindsight_optimum(run.rounds, cfg.arch(), 30, 4, {}, 0.1, &long_loss);
  CHECK(long_loss <= short_loss + 1e-15);
}

TEST_CASE("analyze_run: comparator beats every visited model on the pooled objective") {
  RunConfig cfg = tiny_config();
  cfg.analysis.enabled = true;
  cfg.analysis.hindsight_budget = 25;
  RunResult run = execute_run(cfg, 5, true);
  const AnalysisResult res = analyze_run(cfg, 5, run.rounds, run.log);
  CHECK(res.comparator_pooled_loss <= res.best_visited_pooled_loss + 1e-15);

  // And directly: the comparator's pooled loss really is what regret uses.
  const PooledSet pooled = build_pooled(run.rounds);
  CHECK(pooled_loss(res.comparator, pooled) ==
        doctest::Approx(res.comparator_pooled_loss));
}

TEST_CASE("regret is exactly zero when the comparator equals a frozen learner") {
  RunConfig cfg = tiny_config();
  cfg.eta = 0.0;  // the learner never moves
  RunResult run = execute_run(cfg, 6, true);
  const RegretRecord rec = regret_curve(run.log, run.final_model, run.rounds);
  for (size_t t = 0; t < rec.cumulative_regret.size(); ++t) {
    CHECK(rec.learner_loss[t] == rec.comparator_loss[t]);
    CHECK(rec.cumulative_regret[t] == 0.0);
    CHECK(rec.average_regret[t] == 0.0);
  }
}

TEST_CASE("regret decomposition holds exactly round by round") {
  RunConfig cfg = tiny_config();
  RunResult run = execute_run(cfg, 7, true);
  SplitModel comparator = init_split_model(cfg.arch(), 1234);
  const RegretRecord rec = regret_curve(run.log, comparator, run.rounds);
  for (size_t t = 1; t < rec.cumulative_regret.size(); ++t) {
    CHECK(rec.cumulative_regret[t] ==
          rec.cumulative_regret[t - 1] +
              (rec.learner_loss[t] - rec.comparator_loss[t]));
  }
  // Telescoping: shifting every learner loss by c shifts the cumulative
  // regret by exactly c*t, so a joint (learner, comparator) shift cancels.
  RunLog shifted = run.log;
  for (auto& m : shifted.rounds) m.train_loss_pre += 3.25;
  const RegretRecord rec2 = regret_curve(shifted, comparator, run.rounds);
  for (size_t t = 0; t < rec2.cumulative_regret.size(); ++t) {
    CHECK(rec2.cumulative_regret[t] ==
          doctest::Approx(rec.cumulative_regret[t] + 3.25 * (t + 1)).epsilon(1e-12));
  }
}
