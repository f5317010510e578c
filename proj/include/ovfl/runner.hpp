#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ovfl/analysis.hpp"
#include "ovfl/config.hpp"

namespace ovfl {

struct RunResult {
  RunLog log;
  SplitModel final_model;
  std::vector<RoundDataset> rounds;  // filled only when keep_rounds was set
};

/// One deterministic run: (config, seed) fully determine the data stream, the
/// initial model and therefore every metric.
RunResult execute_run(const RunConfig& config, std::uint64_t seed,
                      bool keep_rounds = false, GradientTrace* trace = nullptr);

struct AnalysisResult {
  RegretRecord regret;
  SplitModel comparator;
  double comparator_pooled_loss = 0.0;
  double best_visited_pooled_loss = 0.0;
  std::optional<AssumptionProbe> probe;
};

/// Post-run analytics: replays the (deterministic) trajectory over the stored
/// rounds to score every visited round-start model on the pooled objective,
/// fits the hindsight comparator (warm-started from the best visited model),
/// and produces the regret curves and probes.
AnalysisResult analyze_run(const RunConfig& config, std::uint64_t seed,
                           const std::vector<RoundDataset>& rounds, const RunLog& log,
                           const GradientTrace* trace = nullptr);

/// Execute every cell x seed, write one run CSV each, plus regret.csv /
/// probes.csv / hindsight.csv when analysis is enabled. Returns a process
/// exit code: 0 on success, 2 on numeric divergence.
int run_experiment(const Experiment& experiment,
                   const std::string& output_dir_override = "",
                   std::optional<std::uint64_t> seed_override = {});

/// CSV location for a cell/seed pair under the cell's output dir.
std::string run_csv_path(const RunConfig& config, const std::string& tag,
                         std::uint64_t seed);

}  // namespace ovfl
