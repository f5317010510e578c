#pragma once

#include <string>
#include <vector>

#include "ovfl/config.hpp"

namespace ovfl {

/// Named experiment presets, one per standard figure of the evaluation:
/// algorithm/quantizer comparisons, E and v sweeps, hex quantizer study,
/// PU/SU sweeps and the bus-trace replay.
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
Experiment preset_experiment(const std::string& name);

/// The four synthetic bus routes the trace preset replays (also shipped as
/// CSV files under configs/traces/). Roughly 520-560 m diagonal polylines.
std::vector<Trace> builtin_bus_traces();
std::vector<double> builtin_bus_speeds();

}  // namespace ovfl
