#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ovfl/environment.hpp"
#include "ovfl/protocol.hpp"
#include "ovfl/quantizer.hpp"
#include "ovfl/split_model.hpp"

namespace ovfl {

struct AnalysisConfig {
  bool enabled = false;
  bool trace_gradients = false;
  int hindsight_budget = 100;
  double hindsight_eta = 0.1;
};

/// One run cell: world, algorithm, optimization and quantization parameters,
/// seeds, and output location. Defaults reproduce the standard setup
/// (500m x 500m, 2 PUs, 4 SUs, 40 slots of 100 readings, T=300, eta=1e-4).
struct RunConfig {
  WorldConfig world;
  std::string algorithm = "ovfl";  // ovfl | cc | lc
  int local_iterations = 1;        // E
  double eta = 1e-4;
  int rounds = 300;                // T
  QuantizerSpec quantizer;         // uniform_scalar b=32 by default
  double mobility_rate = 1.0;      // v, meters per round
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int lc_freeze = 50;
  std::string trace_dir;           // "", a directory of suK.csv files, or "builtin:bus"
  std::vector<double> trace_speeds;
  EvalMode eval_mode = EvalMode::full_precision;
  std::optional<double> weight_clip;
  bool log_wall_time = false;
  std::string output_dir = "out";
  bool output_dir_explicit = false;
  AnalysisConfig analysis;
  std::vector<int> extractor_hidden = {128, 256, 64};
  int embedding_dim = 16;
  std::vector<int> head_hidden = {8};

  void validate() const;
  SplitArch arch() const;
  ProtocolConfig protocol() const;
  /// Short name identifying the cell inside an experiment:
  /// <algo>-<quant>-E..-v..-N..-K.. .
  std::string cell_tag() const;
};

/// An expanded experiment: one RunConfig per grid cell.
struct Experiment {
  std::vector<RunConfig> cells;
};

/// Parse a single-cell config document. Empty files mean "all defaults";
/// unknown keys are rejected; errors carry the offending field.
RunConfig load_config(const std::string& path);
RunConfig config_from_json_text(const std::string& text);

/// Parse a config document that may carry a "cells" override list and/or
/// array values in grid-expandable fields (algorithm, E, eta, T, v,
/// lc_freeze, quantizer.*, world.num_pus, world.num_sus); lists expand to the
/// Cartesian product of cells.
Experiment load_experiment(const std::string& path);
Experiment experiment_from_json_text(const std::string& text);

std::string serialize_config(const RunConfig& config);

}  // namespace ovfl
