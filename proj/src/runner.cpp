#include "ovfl/runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "ovfl/errors.hpp"
#include "ovfl/presets.hpp"

namespace ovfl {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEnvStream = 11;
constexpr std::uint64_t kModelStream = 22;

std::vector<Trace> load_traces(const RunConfig& cfg) {
  if (cfg.trace_dir == "builtin:bus") {
    auto traces = builtin_bus_traces();
    if (static_cast<int>(traces.size()) != cfg.world.num_sus)
      throw ConfigError("builtin:bus provides 4 traces; world.num_sus must be 4");
    return traces;
  }
  std::vector<Trace> traces;
  for (int k = 1; k <= cfg.world.num_sus; ++k) {
    const fs::path path = fs::path(cfg.trace_dir) / ("su" + std::to_string(k) + ".csv");
    traces.push_back(load_trace_file(path.string()));
  }
  return traces;
}

EnvironmentSim make_environment(const RunConfig& cfg, std::uint64_t seed) {
  const std::uint64_t env_seed = derive_seed(seed, kEnvStream);
  if (cfg.trace_dir.empty())
    return EnvironmentSim::random_walk(cfg.world, env_seed, cfg.mobility_rate);
  return EnvironmentSim(cfg.world, env_seed, load_traces(cfg), cfg.trace_speeds,
                        cfg.mobility_rate);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunResult execute_run(const RunConfig& cfg, std::uint64_t seed, bool keep_rounds,
                      GradientTrace* trace) {
  cfg.validate();
  EnvironmentSim env = make_environment(cfg, seed);
  SplitModel model = init_split_model(cfg.arch(), derive_seed(seed, kModelStream));
  auto trainer = make_trainer(cfg.algorithm, std::move(model), cfg.protocol(),
                              cfg.lc_freeze);
  if (trace && trace->enabled()) trace->observe_model(trainer->model());

  RunResult result;
  result.log.tag = cfg.cell_tag();
  result.log.seed = seed;
  result.log.rounds.reserve(cfg.rounds);
  if (keep_rounds) result.rounds.reserve(cfg.rounds);
  for (int t = 1; t <= cfg.rounds; ++t) {
    RoundDataset ds = env.next_round();
    result.log.rounds.push_back(trainer->run_round(ds, trace));
    if (keep_rounds) result.rounds.push_back(std::move(ds));
  }
  result.final_model = trainer->model();
  return result;
}

AnalysisResult analyze_run(const RunConfig& cfg, std::uint64_t seed,
                           const std::vector<RoundDataset>& rounds, const RunLog& log,
                           const GradientTrace* trace) {
  const PooledSet pooled = build_pooled(rounds);
  const std::uint64_t model_seed = derive_seed(seed, kModelStream);

  // Replay the run over the stored rounds to score each visited round-start
  // model on the pooled objective (the run is deterministic, so this rebuilds
  // the exact trajectory without having stored every model).
  SplitModel init = init_split_model(cfg.arch(), model_seed);
  auto trainer = make_trainer(cfg.algorithm, std::move(init), cfg.protocol(),
                              cfg.lc_freeze);
  SplitModel best_visited = trainer->model();
  double best_visited_loss = pooled_loss(best_visited, pooled);
  for (const auto& ds : rounds) {
    trainer->run_round(ds);
    const double loss = pooled_loss(trainer->model(), pooled);
    if (loss < best_visited_loss) {
      best_visited_loss = loss;
      best_visited = trainer->model();
    }
  }

  AnalysisResult out;
  out.best_visited_pooled_loss = best_visited_loss;
  out.comparator = hindsight_optimum(rounds, cfg.arch(), cfg.analysis.hindsight_budget,
                                     model_seed, {best_visited},
                                     cfg.analysis.hindsight_eta,
                                     &out.comparator_pooled_loss);
  out.regret = regret_curve(log, out.comparator, rounds);
  if (trace && trace->enabled()) out.probe = probe_assumptions(*trace);
  return out;
}

std::string run_csv_path(const RunConfig& cfg, const std::string& tag,
                         std::uint64_t seed) {
  return (fs::path(cfg.output_dir) / (tag + "_seed" + std::to_string(seed) + ".csv"))
      .string();
}

namespace {

void write_run_csv(const RunConfig& cfg, const std::string& tag, std::uint64_t seed,
                   const RunLog& log) {
  const std::string path = run_csv_path(cfg, tag, seed);
  std::ofstream out(path, std::ios::binary);  // '\n' endings everywhere
  if (!out) throw IoError("cannot write " + path);
  out << "round,train_loss,test_loss,bits_up,bits_down,cum_bits,wall_ms\n";
  long long cum_bits = 0;
  for (const auto& m : log.rounds) {
    cum_bits += m.bits_up + m.bits_down;
    out << m.round << ',' << fmt_double(m.train_loss_pre) << ','
        << fmt_double(m.test_loss) << ',' << m.bits_up << ',' << m.bits_down << ','
        << cum_bits << ',' << (cfg.log_wall_time ? fmt_double(m.wall_ms) : "0")
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

struct AnalysisRows {
  std::vector<std::string> regret;
  std::vector<std::string> probes;
  std::vector<std::string> hindsight;
};

void append_analysis_rows(const std::string& tag, std::uint64_t seed,
                          const RunConfig& cfg, const AnalysisResult& res,
                          AnalysisRows& rows) {
  for (size_t t = 0; t < res.regret.learner_loss.size(); ++t) {
    rows.regret.push_back(tag + "," + std::to_string(seed) + "," +
                          std::to_string(t + 1) + "," +
                          fmt_double(res.regret.learner_loss[t]) + "," +
                          fmt_double(res.regret.comparator_loss[t]) + "," +
                          fmt_double(res.regret.cumulative_regret[t]) + "," +
                          fmt_double(res.regret.average_regret[t]));
  }
  rows.hindsight.push_back(tag + "," + std::to_string(seed) + "," +
                           fmt_double(res.comparator_pooled_loss) + "," +
                           fmt_double(res.best_visited_pooled_loss) + "," +
                           std::to_string(cfg.analysis.hindsight_budget));
  if (res.probe) {
    rows.probes.push_back(tag + "," + std::to_string(seed) + "," +
                          fmt_double(res.probe->L_hat) + "," +
                          fmt_double(res.probe->rho_hat) + "," +
                          fmt_double(res.probe->beta_hat) + "," +
                          std::to_string(res.probe->D) + "," +
                          fmt_double(res.probe->epsilon_hat));
  }
}

void write_rows(const std::string& dir, const std::string& file,
                const std::string& header, const std::vector<std::string>& rows) {
  if (rows.empty()) return;
  const std::string path = (fs::path(dir) / file).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

}  // namespace

int run_experiment(const Experiment& experiment, const std::string& output_dir_override,
                   std::optional<std::uint64_t> seed_override) {
  Experiment exp = experiment;
  const char* env_dir = std::getenv("OVFL_OUTPUT_DIR");
  for (auto& cell : exp.cells) {
    if (!output_dir_override.empty()) cell.output_dir = output_dir_override;
    else if (!cell.output_dir_explicit && env_dir && *env_dir) cell.output_dir = env_dir;
    if (seed_override) cell.seeds = {*seed_override};
    cell.validate();
  }

  // Tags must be unique inside one experiment so cells never collide on file
  // names (cells can differ only in fields the tag does not encode).
  std::vector<std::string> tags;
  std::map<std::string, int> tag_uses;
  for (const auto& cell : exp.cells) {
    std::string tag = cell.cell_tag();
    const int n = ++tag_uses[tag];
    if (n > 1) tag += "-" + std::to_string(n);
    tags.push_back(tag);
  }

  try {
    std::map<std::string, AnalysisRows> per_dir;
    for (size_t c = 0; c < exp.cells.size(); ++c) {
      const RunConfig& cfg = exp.cells[c];
      fs::create_directories(cfg.output_dir);
      for (std::uint64_t seed : cfg.seeds) {
        GradientTrace trace;
        if (cfg.analysis.trace_gradients) trace = GradientTrace(derive_seed(seed, 33));
        const bool keep = cfg.analysis.enabled;
        RunResult run = execute_run(cfg, seed, keep, &trace);
        write_run_csv(cfg, tags[c], seed, run.log);
        if (cfg.analysis.enabled) {
          AnalysisResult res = analyze_run(cfg, seed, run.rounds, run.log,
                                           cfg.analysis.trace_gradients ? &trace : nullptr);
          append_analysis_rows(tags[c], seed, cfg, res, per_dir[cfg.output_dir]);
        }
      }
    }
    for (const auto& [dir, rows] : per_dir) {
      write_rows(dir, "regret.csv",
                 "tag,seed,round,learner_loss,comparator_loss,cum_regret,avg_regret",
                 rows.regret);
      write_rows(dir, "probes.csv", "tag,seed,L_hat,rho_hat,beta_hat,D,epsilon_hat",
                 rows.probes);
      write_rows(dir, "hindsight.csv",
                 "tag,seed,comparator_pooled_loss,best_visited_pooled_loss,budget",
                 rows.hindsight);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "run diverged: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace ovfl
