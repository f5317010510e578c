#include "ovfl/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ovfl/errors.hpp"

namespace ovfl {

using nlohmann::json;

void RunConfig::validate() const {
  world.validate();
  if (algorithm != "ovfl" && algorithm != "cc" && algorithm != "lc")
    throw ConfigError("algorithm: must be ovfl, cc or lc, got '" + algorithm + "'");
  if (local_iterations < 1) throw ConfigError("E: must be >= 1");
  if (eta < 0) throw ConfigError("eta: must be >= 0");
  if (rounds < 1) throw ConfigError("T: must be >= 1");
  quantizer.validate();
  if (mobility_rate < 0) throw ConfigError("v: must be >= 0");
  if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
  if (lc_freeze < 1) throw ConfigError("lc_freeze: must be >= 1");
  if (weight_clip && *weight_clip <= 0) throw ConfigError("weight_clip: must be positive");
  if (analysis.hindsight_budget < 1)
    throw ConfigError("analysis.hindsight_budget: must be >= 1");
  if (analysis.hindsight_eta <= 0)
    throw ConfigError("analysis.hindsight_eta: must be positive");
  if (embedding_dim < 1) throw ConfigError("embedding_dim: must be >= 1");
  for (int h : extractor_hidden)
    if (h < 1) throw ConfigError("extractor_hidden: sizes must be >= 1");
  for (int h : head_hidden)
    if (h < 1) throw ConfigError("head_hidden: sizes must be >= 1");
  if (!trace_speeds.empty() &&
      static_cast<int>(trace_speeds.size()) != world.num_sus)
    throw ConfigError("trace_speeds: need one speed per SU");
}

SplitArch RunConfig::arch() const {
  return SplitArch::make(world.feature_dim(), extractor_hidden, embedding_dim,
                         head_hidden, world.num_pus, world.num_sus);
}

ProtocolConfig RunConfig::protocol() const {
  ProtocolConfig p;
  p.local_iterations = local_iterations;
  p.eta = eta;
  p.quantizer = quantizer;
  p.eval_mode = eval_mode;
  p.weight_clip = weight_clip;
  return p;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string RunConfig::cell_tag() const {
  std::string q;
  switch (quantizer.kind) {
    case QuantKind::identity: q = "ident"; break;
    case QuantKind::uniform_scalar: q = "u" + std::to_string(quantizer.bits_per_component); break;
    case QuantKind::hex_lattice: q = "hex" + std::to_string(quantizer.bits_per_component); break;
  }
  std::string tag = algorithm + "-" + q + "-E" + std::to_string(local_iterations) +
                    "-v" + format_double(mobility_rate) + "-N" +
                    std::to_string(world.num_pus) + "-K" + std::to_string(world.num_sus);
  if (algorithm == "lc") tag += "-f" + std::to_string(lc_freeze);
  return tag;
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& scope) {
  for (const auto& [key, value] : obj.items())
    if (!known.count(key))
      throw ConfigError(scope.empty() ? "unknown config key '" + key + "'"
                                      : "unknown config key '" + scope + "." + key + "'");
}

template <typename T>
void read_field(const json& obj, const char* key, T& into) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + ": wrong value type");
  }
}

void parse_world(const json& obj, WorldConfig& world) {
  reject_unknown_keys(obj,
                      {"area", "num_pus", "num_sus", "pu_positions",
                       "pathloss_exponent", "slots_per_round", "rss_per_slot",
                       "train_slots", "test_slots", "d_min", "shadow_grid",
                       "shadow_noise_std"},
                      "world");
  read_field(obj, "area", world.area);
  read_field(obj, "num_pus", world.num_pus);
  read_field(obj, "num_sus", world.num_sus);
  read_field(obj, "pathloss_exponent", world.pathloss_exponent);
  read_field(obj, "slots_per_round", world.slots_per_round);
  read_field(obj, "rss_per_slot", world.rss_per_slot);
  read_field(obj, "train_slots", world.train_slots);
  read_field(obj, "test_slots", world.test_slots);
  read_field(obj, "d_min", world.d_min);
  read_field(obj, "shadow_grid", world.shadow_grid);
  read_field(obj, "shadow_noise_std", world.shadow_noise_std);
  if (obj.contains("pu_positions")) {
    world.pu_positions.clear();
    for (const auto& p : obj.at("pu_positions")) {
      if (!p.is_array() || p.size() != 2)
        throw ConfigError("world.pu_positions: each entry must be [x, y]");
      world.pu_positions.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  }
}

void parse_quantizer(const json& obj, QuantizerSpec& spec) {
  reject_unknown_keys(obj, {"kind", "bits_per_component"}, "quantizer");
  if (obj.contains("kind")) spec.kind = quant_kind_from_string(obj.at("kind").get<std::string>());
  read_field(obj, "bits_per_component", spec.bits_per_component);
}

void parse_analysis(const json& obj, AnalysisConfig& a) {
  reject_unknown_keys(
      obj, {"enabled", "trace_gradients", "hindsight_budget", "hindsight_eta"},
      "analysis");
  read_field(obj, "enabled", a.enabled);
  read_field(obj, "trace_gradients", a.trace_gradients);
  read_field(obj, "hindsight_budget", a.hindsight_budget);
  read_field(obj, "hindsight_eta", a.hindsight_eta);
}

RunConfig config_from_json(const json& doc) {
  RunConfig cfg;
  reject_unknown_keys(doc,
                      {"world", "algorithm", "E", "eta", "T", "quantizer", "v",
                       "seeds", "lc_freeze", "trace_dir", "trace_speeds",
                       "eval_mode", "weight_clip", "log_wall_time", "output_dir",
                       "analysis", "extractor_hidden", "embedding_dim",
                       "head_hidden"},
                      "");
  if (doc.contains("world")) parse_world(doc.at("world"), cfg.world);
  read_field(doc, "algorithm", cfg.algorithm);
  read_field(doc, "E", cfg.local_iterations);
  read_field(doc, "eta", cfg.eta);
  read_field(doc, "T", cfg.rounds);
  if (doc.contains("quantizer")) parse_quantizer(doc.at("quantizer"), cfg.quantizer);
  read_field(doc, "v", cfg.mobility_rate);
  read_field(doc, "seeds", cfg.seeds);
  read_field(doc, "lc_freeze", cfg.lc_freeze);
  read_field(doc, "trace_dir", cfg.trace_dir);
  read_field(doc, "trace_speeds", cfg.trace_speeds);
  if (doc.contains("eval_mode")) {
    const std::string mode = doc.at("eval_mode").get<std::string>();
    if (mode == "full_precision") cfg.eval_mode = EvalMode::full_precision;
    else if (mode == "quantized") cfg.eval_mode = EvalMode::quantized;
    else throw ConfigError("eval_mode: must be full_precision or quantized");
  }
  if (doc.contains("weight_clip") && !doc.at("weight_clip").is_null())
    cfg.weight_clip = doc.at("weight_clip").get<double>();
  read_field(doc, "log_wall_time", cfg.log_wall_time);
  if (doc.contains("output_dir")) {
    cfg.output_dir = doc.at("output_dir").get<std::string>();
    cfg.output_dir_explicit = true;
  }
  if (doc.contains("analysis")) parse_analysis(doc.at("analysis"), cfg.analysis);
  read_field(doc, "extractor_hidden", cfg.extractor_hidden);
  read_field(doc, "embedding_dim", cfg.embedding_dim);
  read_field(doc, "head_hidden", cfg.head_hidden);
  cfg.validate();
  return cfg;
}

json parse_text(const std::string& text) {
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](unsigned char c) { return std::isspace(c); });
  if (blank) return json::object();  // empty document -> all defaults
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

json merge(const json& base, const json& overrides) {
  json out = base;
  for (const auto& [key, value] : overrides.items()) {
    if (value.is_object() && out.contains(key) && out.at(key).is_object())
      out[key] = merge(out.at(key), value);
    else
      out[key] = value;
  }
  return out;
}

// Fields whose array values mean "one cell per element".
const std::vector<std::vector<std::string>> kGridPaths = {
    {"algorithm"},          {"E"},
    {"eta"},                {"T"},
    {"v"},                  {"lc_freeze"},
    {"quantizer", "kind"},  {"quantizer", "bits_per_component"},
    {"world", "num_pus"},   {"world", "num_sus"},
};

const json* find_path(const json& doc, const std::vector<std::string>& path) {
  const json* cur = &doc;
  for (const auto& part : path) {
    if (!cur->is_object() || !cur->contains(part)) return nullptr;
    cur = &cur->at(part);
  }
  return cur;
}

void set_path(json& doc, const std::vector<std::string>& path, const json& value) {
  json* cur = &doc;
  for (size_t i = 0; i + 1 < path.size(); ++i) cur = &(*cur)[path[i]];
  (*cur)[path.back()] = value;
}

std::vector<json> expand_grids(const json& cell) {
  std::vector<json> pending{cell};
  for (const auto& path : kGridPaths) {
    std::vector<json> next;
    for (const auto& doc : pending) {
      const json* value = find_path(doc, path);
      if (value && value->is_array()) {
        for (const auto& element : *value) {
          json expanded = doc;
          set_path(expanded, path, element);
          next.push_back(std::move(expanded));
        }
      } else {
        next.push_back(doc);
      }
    }
    pending = std::move(next);
  }
  return pending;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Experiment experiment_from_json_text(const std::string& text) {
  json doc = parse_text(text);
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");

  json cells = json::array();
  if (doc.contains("cells")) {
    cells = doc.at("cells");
    if (!cells.is_array() || cells.empty())
      throw ConfigError("cells: must be a non-empty array of override objects");
    doc.erase("cells");
  } else {
    cells.push_back(json::object());
  }

  Experiment exp;
  for (const auto& overrides : cells) {
    if (!overrides.is_object()) throw ConfigError("cells: entries must be objects");
    for (const auto& expanded : expand_grids(merge(doc, overrides)))
      exp.cells.push_back(config_from_json(expanded));
  }
  return exp;
}

Experiment load_experiment(const std::string& path) {
  return experiment_from_json_text(read_file(path));
}

RunConfig config_from_json_text(const std::string& text) {
  Experiment exp = experiment_from_json_text(text);
  if (exp.cells.size() != 1)
    throw ConfigError("expected a single-cell config, got " +
                      std::to_string(exp.cells.size()) + " cells");
  return exp.cells.front();
}

RunConfig load_config(const std::string& path) {
  return config_from_json_text(read_file(path));
}

std::string serialize_config(const RunConfig& cfg) {
  json doc;
  doc["world"] = {{"area", cfg.world.area},
                  {"num_pus", cfg.world.num_pus},
                  {"num_sus", cfg.world.num_sus},
                  {"pathloss_exponent", cfg.world.pathloss_exponent},
                  {"slots_per_round", cfg.world.slots_per_round},
                  {"rss_per_slot", cfg.world.rss_per_slot},
                  {"train_slots", cfg.world.train_slots},
                  {"test_slots", cfg.world.test_slots},
                  {"d_min", cfg.world.d_min},
                  {"shadow_grid", cfg.world.shadow_grid},
                  {"shadow_noise_std", cfg.world.shadow_noise_std}};
  if (!cfg.world.pu_positions.empty()) {
    json positions = json::array();
    for (const auto& p : cfg.world.pu_positions) positions.push_back({p.x, p.y});
    doc["world"]["pu_positions"] = positions;
  }
  doc["algorithm"] = cfg.algorithm;
  doc["E"] = cfg.local_iterations;
  doc["eta"] = cfg.eta;
  doc["T"] = cfg.rounds;
  doc["quantizer"] = {{"kind", to_string(cfg.quantizer.kind)},
                      {"bits_per_component", cfg.quantizer.bits_per_component}};
  doc["v"] = cfg.mobility_rate;
  doc["seeds"] = cfg.seeds;
  doc["lc_freeze"] = cfg.lc_freeze;
  if (!cfg.trace_dir.empty()) doc["trace_dir"] = cfg.trace_dir;
  if (!cfg.trace_speeds.empty()) doc["trace_speeds"] = cfg.trace_speeds;
  doc["eval_mode"] =
      cfg.eval_mode == EvalMode::full_precision ? "full_precision" : "quantized";
  if (cfg.weight_clip) doc["weight_clip"] = *cfg.weight_clip;
  doc["log_wall_time"] = cfg.log_wall_time;
  doc["output_dir"] = cfg.output_dir;
  doc["analysis"] = {{"enabled", cfg.analysis.enabled},
                     {"trace_gradients", cfg.analysis.trace_gradients},
                     {"hindsight_budget", cfg.analysis.hindsight_budget},
                     {"hindsight_eta", cfg.analysis.hindsight_eta}};
  doc["extractor_hidden"] = cfg.extractor_hidden;
  doc["embedding_dim"] = cfg.embedding_dim;
  doc["head_hidden"] = cfg.head_hidden;
  return doc.dump(2) + "\n";
}

}  // namespace ovfl
