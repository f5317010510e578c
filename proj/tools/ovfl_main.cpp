#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ovfl/config.hpp"
#include "ovfl/errors.hpp"
#include "ovfl/presets.hpp"
#include "ovfl/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Online split-network training simulator for cooperative spectrum sensing"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed_value = 0;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a JSON config");
  run_cmd->add_option("config", config_path, "Path to the config file")->required();
  auto* run_out = run_cmd->add_option("--output-dir", output_dir,
                                      "Write CSVs here instead of the configured dir");
  auto* run_seed = run_cmd->add_option("--seed-override", seed_value,
                                       "Run only this seed");

  auto* presets_cmd = app.add_subcommand("presets", "Named experiment presets");
  presets_cmd->require_subcommand(1);
  auto* list_cmd = presets_cmd->add_subcommand("list", "List preset names");
  std::string preset_name;
  auto* preset_run_cmd = presets_cmd->add_subcommand("run", "Run a preset by name");
  preset_run_cmd->add_option("name", preset_name, "Preset name")->required();
  auto* preset_out = preset_run_cmd->add_option("--output-dir", output_dir,
                                                "Write CSVs here instead of out/<preset>");
  auto* preset_seed = preset_run_cmd->add_option("--seed-override", seed_value,
                                                 "Run only this seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ovfl::Experiment exp = ovfl::load_experiment(config_path);
      std::optional<std::uint64_t> seed;
      if (run_seed->count()) seed = seed_value;
      return ovfl::run_experiment(exp, run_out->count() ? output_dir : "", seed);
    }
    if (*list_cmd) {
      for (const auto& name : ovfl::preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (*preset_run_cmd) {
      ovfl::Experiment exp = ovfl::preset_experiment(preset_name);
      std::optional<std::uint64_t> seed;
      if (preset_seed->count()) seed = seed_value;
      return ovfl::run_experiment(exp, preset_out->count() ? output_dir : "", seed);
    }
  } catch (const ovfl::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
