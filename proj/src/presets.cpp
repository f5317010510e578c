#include "ovfl/presets.hpp"

#include <algorithm>

#include "ovfl/errors.hpp"

namespace ovfl {

namespace {

RunConfig base_config() {
  RunConfig cfg;  // defaults already mirror the standard setup
  return cfg;
}

RunConfig ovfl_cell(QuantKind kind, int bits) {
  RunConfig cfg = base_config();
  cfg.algorithm = "ovfl";
  cfg.quantizer = {kind, bits};
  return cfg;
}

void set_output(Experiment& exp, const std::string& name) {
  for (auto& cell : exp.cells) cell.output_dir = "out/" + name;
}

Experiment fig4() {
  Experiment exp;
  {
    RunConfig lc = base_config();
    lc.algorithm = "lc";
    lc.quantizer = {QuantKind::identity, 32};
    lc.lc_freeze = 50;
    exp.cells.push_back(lc);
  }
  exp.cells.push_back(ovfl_cell(QuantKind::uniform_scalar, 2));
  exp.cells.push_back(ovfl_cell(QuantKind::uniform_scalar, 4));
  exp.cells.push_back(ovfl_cell(QuantKind::uniform_scalar, 32));
  {
    RunConfig cc = base_config();
    cc.algorithm = "cc";
    cc.quantizer = {QuantKind::identity, 32};
    exp.cells.push_back(cc);
  }
  return exp;
}

Experiment fig5() {
  Experiment exp;
  exp.cells.push_back(ovfl_cell(QuantKind::uniform_scalar, 2));
  exp.cells.push_back(ovfl_cell(QuantKind::uniform_scalar, 4));
  exp.cells.push_back(ovfl_cell(QuantKind::uniform_scalar, 32));
  {
    RunConfig cc = base_config();
    cc.algorithm = "cc";
    cc.quantizer = {QuantKind::identity, 32};
    exp.cells.push_back(cc);
  }
  return exp;
}

Experiment fig6() {
  Experiment exp;
  for (int e : {1, 4}) {
    RunConfig cfg = ovfl_cell(QuantKind::identity, 32);
    cfg.local_iterations = e;
    exp.cells.push_back(cfg);
  }
  return exp;
}

Experiment fig7() {
  Experiment exp;
  for (double v : {1.0, 5.0}) {
    RunConfig cfg = ovfl_cell(QuantKind::identity, 32);
    cfg.mobility_rate = v;
    exp.cells.push_back(cfg);
  }
  return exp;
}

Experiment fig8_9() {
  Experiment exp;
  for (int b : {2, 4}) exp.cells.push_back(ovfl_cell(QuantKind::hex_lattice, b));
  for (int b : {2, 4}) exp.cells.push_back(ovfl_cell(QuantKind::uniform_scalar, b));
  return exp;
}

Experiment fig10() {
  Experiment exp;
  for (int n : {1, 2, 4}) {
    RunConfig cfg = ovfl_cell(QuantKind::identity, 32);
    cfg.world.num_pus = n;
    exp.cells.push_back(cfg);
  }
  return exp;
}

Experiment fig11() {
  Experiment exp;
  for (int k : {2, 4, 6}) {
    RunConfig cfg = ovfl_cell(QuantKind::identity, 32);
    cfg.world.num_sus = k;
    exp.cells.push_back(cfg);
  }
  return exp;
}

Experiment fig12() {
  Experiment exp;
  RunConfig cfg = ovfl_cell(QuantKind::identity, 32);
  cfg.local_iterations = 4;
  cfg.rounds = 100;
  cfg.trace_dir = "builtin:bus";
  cfg.trace_speeds = builtin_bus_speeds();
  cfg.world.pu_positions = {{60.0, 60.0}, {440.0, 440.0}};
  exp.cells.push_back(cfg);
  return exp;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig4_loss_vs_rounds", "fig5_loss_vs_bits", "fig6_E_sweep",
          "fig7_v_sweep",        "fig8_9_hex",        "fig10_pu_sweep",
          "fig11_su_sweep",      "fig12_bus_trace"};
}

bool is_preset(const std::string& name) {
  const auto names = preset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

Experiment preset_experiment(const std::string& name) {
  Experiment exp;
  if (name == "fig4_loss_vs_rounds") exp = fig4();
  else if (name == "fig5_loss_vs_bits") exp = fig5();
  else if (name == "fig6_E_sweep") exp = fig6();
  else if (name == "fig7_v_sweep") exp = fig7();
  else if (name == "fig8_9_hex") exp = fig8_9();
  else if (name == "fig10_pu_sweep") exp = fig10();
  else if (name == "fig11_su_sweep") exp = fig11();
  else if (name == "fig12_bus_trace") exp = fig12();
  else throw ConfigError("unknown preset '" + name + "'");
  set_output(exp, name);
  for (auto& cell : exp.cells) cell.validate();
  return exp;
}

std::vector<Trace> builtin_bus_traces() {
  // Dogleg polylines, street-like rather than straight diagonals: a straight
  // diagonal line between the two endpoint transmitters keeps a bus
  // equidistant from both mid-route, which makes their levels inseparable.
  return {
      make_trace({{60, 60}, {80, 200}, {210, 230}, {250, 380}, {440, 440}}),
      make_trace({{80, 40}, {240, 60}, {260, 200}, {400, 230}, {420, 420}}),
      make_trace({{50, 90}, {190, 110}, {210, 250}, {350, 270}, {430, 430}}),
      make_trace({{70, 50}, {90, 210}, {230, 230}, {250, 390}, {440, 440}}),
  };
}

std::vector<double> builtin_bus_speeds() { return {4.0, 5.0, 6.0, 7.0}; }

}  // namespace ovfl
