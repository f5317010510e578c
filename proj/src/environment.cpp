#include "ovfl/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ovfl/errors.hpp"

namespace ovfl {

void WorldConfig::validate() const {
  if (area <= 0) throw ConfigError("world.area: must be positive");
  if (num_pus < 1) throw ConfigError("world.num_pus: must be >= 1");
  if (num_sus < 1) throw ConfigError("world.num_sus: must be >= 1");
  if (pathloss_exponent <= 0) throw ConfigError("world.pathloss_exponent: must be positive");
  if (rss_per_slot < 1) throw ConfigError("world.rss_per_slot: must be >= 1");
  if (train_slots < 1 || test_slots < 0)
    throw ConfigError("world.train_slots/test_slots: need at least one training slot");
  if (train_slots + test_slots != slots_per_round)
    throw ConfigError("world.slots_per_round: must equal train_slots + test_slots");
  if (d_min <= 0) throw ConfigError("world.d_min: must be positive");
  if (shadow_grid < 2) throw ConfigError("world.shadow_grid: must be >= 2");
  if (shadow_noise_std < 0) throw ConfigError("world.shadow_noise_std: must be >= 0");
  if (!pu_positions.empty()) {
    if (static_cast<int>(pu_positions.size()) != num_pus)
      throw ConfigError("world.pu_positions: count must equal num_pus");
    for (const auto& p : pu_positions)
      if (p.x < 0 || p.y < 0 || p.x > area || p.y > area)
        throw ConfigError("world.pu_positions: point outside the area");
  }
}

std::vector<Point> WorldConfig::resolved_pu_positions() const {
  if (!pu_positions.empty()) return pu_positions;
  std::vector<Point> out;
  out.reserve(num_pus);
  for (int n = 0; n < num_pus; ++n) {
    const double f = static_cast<double>(n + 1) / (num_pus + 1);
    out.push_back({area * f, area * (1.0 - f)});
  }
  return out;
}

Trace make_trace(std::vector<Point> waypoints) {
  if (waypoints.size() < 2) throw ConfigError("trace needs at least 2 waypoints");
  Trace t;
  t.waypoints = std::move(waypoints);
  t.cumulative_length.resize(t.waypoints.size(), 0.0);
  for (size_t i = 1; i < t.waypoints.size(); ++i) {
    const double seg = std::hypot(t.waypoints[i].x - t.waypoints[i - 1].x,
                                  t.waypoints[i].y - t.waypoints[i - 1].y);
    t.cumulative_length[i] = t.cumulative_length[i - 1] + seg;
  }
  return t;
}

Point Trace::position_at(double distance) const {
  if (distance <= 0.0) return waypoints.front();
  if (distance >= total_length()) return waypoints.back();
  const auto it = std::upper_bound(cumulative_length.begin(), cumulative_length.end(),
                                   distance);
  const size_t i = static_cast<size_t>(it - cumulative_length.begin());
  const double seg_start = cumulative_length[i - 1];
  const double seg_len = cumulative_length[i] - seg_start;
  const double f = seg_len > 0 ? (distance - seg_start) / seg_len : 0.0;
  return {waypoints[i - 1].x + f * (waypoints[i].x - waypoints[i - 1].x),
          waypoints[i - 1].y + f * (waypoints[i].y - waypoints[i - 1].y)};
}

Trace load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path);
  std::vector<Point> waypoints;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    std::string xs, ys;
    if (!std::getline(ss, xs, ',') || !std::getline(ss, ys)) {
      if (first) { first = false; continue; }  // header row
      throw IoError("bad trace row in " + path + ": " + line);
    }
    try {
      const double x = std::stod(xs);
      const double y = std::stod(ys);
      waypoints.push_back({x, y});
    } catch (const std::exception&) {
      if (first) { first = false; continue; }
      throw IoError("bad trace row in " + path + ": " + line);
    }
    first = false;
  }
  return make_trace(std::move(waypoints));
}

std::vector<double> received_power_terms(const std::vector<int>& pu_levels,
                                         Point su_pos,
                                         const std::vector<Point>& pu_positions,
                                         double pathloss_exponent, double d_min,
                                         const std::vector<double>& shadow_values) {
  if (pu_levels.size() != pu_positions.size() ||
      pu_levels.size() != shadow_values.size())
    throw ShapeError("received_power: per-PU argument lengths differ");
  std::vector<double> terms(pu_levels.size());
  for (size_t n = 0; n < pu_levels.size(); ++n) {
    const double d = std::max(
        std::hypot(su_pos.x - pu_positions[n].x, su_pos.y - pu_positions[n].y), d_min);
    terms[n] = pu_levels[n] - 10.0 * pathloss_exponent * std::log10(d) - shadow_values[n];
  }
  return terms;
}

double received_power(const std::vector<int>& pu_levels, Point su_pos,
                      const std::vector<Point>& pu_positions,
                      double pathloss_exponent, double d_min,
                      const std::vector<double>& shadow_values) {
  double sum = 0.0;
  for (double t : received_power_terms(pu_levels, su_pos, pu_positions,
                                       pathloss_exponent, d_min, shadow_values))
    sum += t;
  return sum;
}

std::vector<Point> deployment_positions(int num_sus, double area) {
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(num_sus))));
  const int rows = (num_sus + cols - 1) / cols;
  // Fixed jitter off the exact grid: a perfectly regular grid can sit
  // equidistant from symmetrically placed transmitters, which makes their
  // levels unidentifiable from summed readings.
  Rng jitter(0x5e7a11ed);
  std::vector<Point> out;
  out.reserve(num_sus);
  for (int k = 0; k < num_sus; ++k) {
    const int col = k % cols;
    const int row = k / cols;
    const double jx = (jitter.uniform() - 0.5) * 0.6 * area / (cols + 1);
    const double jy = (jitter.uniform() - 0.5) * 0.6 * area / (rows + 1);
    out.push_back({area * (col + 1) / (cols + 1) + jx, area * (row + 1) / (rows + 1) + jy});
  }
  return out;
}

namespace {

double reflect_into(double v, double hi) {
  // Fold into [0, hi]; one fold almost always suffices (v << hi per round).
  while (v < 0.0 || v > hi) {
    if (v < 0.0) v = -v;
    if (v > hi) v = 2.0 * hi - v;
  }
  return v;
}

}  // namespace

void step_mobility(SuState& state, double v, double area, Rng& rng) {
  if (!state.traces.empty()) {
    for (size_t k = 0; k < state.positions.size(); ++k) {
      const double speed = k < state.trace_speeds.size() ? state.trace_speeds[k] : v;
      state.trace_progress[k] += speed;
      state.positions[k] = state.traces[k].position_at(state.trace_progress[k]);
    }
    return;
  }
  for (auto& pos : state.positions) {
    const double heading = rng.uniform(0.0, Rng::two_pi);
    pos.x = reflect_into(pos.x + v * std::cos(heading), area);
    pos.y = reflect_into(pos.y + v * std::sin(heading), area);
  }
}

RoundDataset sample_round(const WorldConfig& world, const ShadowingMap& shadow,
                          const SuState& state, int round_index, Rng& rng) {
  const auto pu_positions = world.resolved_pu_positions();
  const int slots = world.slots_per_round;
  const int dim = world.feature_dim();

  RoundDataset ds;
  ds.round_index = round_index;
  ds.train_rows = world.train_slots;
  ds.test_rows = world.test_slots;
  ds.labels = DenseMatrix(slots, world.num_pus);
  ds.features.reserve(world.num_sus);
  for (int k = 0; k < world.num_sus; ++k) ds.features.emplace_back(slots, dim);

  std::vector<int> levels(world.num_pus);
  std::vector<double> shadow_draws(world.num_pus);
  for (int s = 0; s < slots; ++s) {
    for (int n = 0; n < world.num_pus; ++n) {
      levels[n] = 1 + static_cast<int>(rng.uniform_index(4));  // {1,2,3,4}
      ds.labels(s, n) = levels[n];
    }
    for (int k = 0; k < world.num_sus; ++k) {
      const Point pos = state.positions[k];
      double* row = ds.features[k].row(s);
      row[0] = pos.x;
      row[1] = pos.y;
      for (int r = 0; r < world.rss_per_slot; ++r) {
        for (int n = 0; n < world.num_pus; ++n)
          shadow_draws[n] = shadow.sample(rng, pos.x, pos.y);
        row[2 + r] = received_power(levels, pos, pu_positions,
                                    world.pathloss_exponent, world.d_min, shadow_draws);
      }
    }
  }
  return ds;
}

std::vector<DenseMatrix> RoundDataset::train_features() const {
  std::vector<DenseMatrix> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(slice_rows(f, 0, train_rows));
  return out;
}

std::vector<DenseMatrix> RoundDataset::test_features() const {
  std::vector<DenseMatrix> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(slice_rows(f, train_rows, test_rows));
  return out;
}

void FeatureNormalizer::update(const RoundDataset& round, double area) {
  inv_area_ = 1.0 / area;
  if (!fitted_) {
    mean_.assign(round.features.size(), {});
    scale_.assign(round.features.size(), {});
    for (size_t k = 0; k < round.features.size(); ++k) fit_party(round, static_cast<int>(k));
    fitted_ = true;
    return;
  }
  // Each sensor recalibrates its own stream when it drifts out of range.
  for (size_t k = 0; k < round.features.size(); ++k) {
    if (median_abs_z(round, static_cast<int>(k)) > kRecalibrateMedianZ) {
      fit_party(round, static_cast<int>(k));
      ++recalibrations_;
    }
  }
}

void FeatureNormalizer::fit_party(const RoundDataset& round, int party) {
  const auto& block = round.features[party];
  const int rows = round.train_rows;
  std::vector<double> mean(block.cols, 0.0), scale(block.cols, 1.0);
  for (int d = 2; d < block.cols; ++d) {
    double m = 0.0;
    for (int r = 0; r < rows; ++r) m += block(r, d);
    m /= rows;
    double var = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double c = block(r, d) - m;
      var += c * c;
    }
    const double sd = std::sqrt(var / rows);
    mean[d] = m;
    scale[d] = sd < 1e-9 ? 1.0 : sd;
  }
  mean_[party] = std::move(mean);
  scale_[party] = std::move(scale);
}

double FeatureNormalizer::median_abs_z(const RoundDataset& round, int party) const {
  const auto& block = round.features[party];
  const auto& mean = mean_.at(party);
  const auto& scale = scale_.at(party);
  std::vector<double> zs;
  zs.reserve(static_cast<size_t>(round.train_rows) * (block.cols - 2));
  for (int r = 0; r < round.train_rows; ++r) {
    const double* row = block.row(r);
    for (int d = 2; d < block.cols; ++d)
      zs.push_back(std::abs((row[d] - mean[d]) / scale[d]));
  }
  const size_t mid = zs.size() / 2;
  std::nth_element(zs.begin(), zs.begin() + mid, zs.end());
  return zs[mid];
}

DenseMatrix FeatureNormalizer::apply(int party, const DenseMatrix& raw) const {
  if (!fitted_) throw ConfigError("FeatureNormalizer used before any update");
  const auto& mean = mean_.at(party);
  const auto& scale = scale_.at(party);
  DenseMatrix out(raw.rows, raw.cols);
  for (int r = 0; r < raw.rows; ++r) {
    const double* src = raw.row(r);
    double* dst = out.row(r);
    dst[0] = src[0] * inv_area_;
    dst[1] = src[1] * inv_area_;
    for (int d = 2; d < raw.cols; ++d) dst[d] = (src[d] - mean[d]) / scale[d];
  }
  return out;
}

std::vector<DenseMatrix> FeatureNormalizer::apply_all(
    const std::vector<DenseMatrix>& raw) const {
  std::vector<DenseMatrix> out;
  out.reserve(raw.size());
  for (size_t k = 0; k < raw.size(); ++k)
    out.push_back(apply(static_cast<int>(k), raw[k]));
  return out;
}

EnvironmentSim::EnvironmentSim(const WorldConfig& world, std::uint64_t master_seed)
    : EnvironmentSim(world, master_seed, {}, {}, 1.0) {}

EnvironmentSim::EnvironmentSim(const WorldConfig& world, std::uint64_t master_seed,
                               std::vector<Trace> traces,
                               std::vector<double> trace_speeds, double mobility_rate)
    : world_(world),
      pu_positions_(world.resolved_pu_positions()),
      shadow_(build_shadowing_map(derive_seed(master_seed, 1), world.shadow_grid,
                                  world.area, world.shadow_noise_std)),
      stream_rng_(derive_seed(master_seed, 3)),
      mobility_rate_(mobility_rate) {
  world_.validate();
  if (!traces.empty() && static_cast<int>(traces.size()) != world.num_sus)
    throw ConfigError("trace count must equal num_sus");

  state_.traces = std::move(traces);
  state_.trace_speeds = std::move(trace_speeds);
  if (!state_.traces.empty()) {
    state_.trace_progress.assign(world.num_sus, 0.0);
    if (state_.trace_speeds.empty())
      state_.trace_speeds.assign(world.num_sus, mobility_rate_);
    for (const auto& t : state_.traces) state_.positions.push_back(t.waypoints.front());
  } else {
    // Sensors start from a deterministic deployment grid covering the area;
    // only the walk itself is seeded. Random spawns would make low-v runs a
    // placement lottery.
    state_.positions = deployment_positions(world.num_sus, world.area);
  }
}

EnvironmentSim EnvironmentSim::random_walk(const WorldConfig& world,
                                           std::uint64_t seed, double v) {
  return EnvironmentSim(world, seed, {}, {}, v);
}

RoundDataset EnvironmentSim::next_round_raw() {
  ++round_;
  if (round_ > 1) step_mobility(state_, mobility_rate_, world_.area, stream_rng_);
  return sample_round(world_, shadow_, state_, round_, stream_rng_);
}

RoundDataset EnvironmentSim::next_round() {
  RoundDataset ds = next_round_raw();
  normalizer_.update(ds, world_.area);
  ds.features = normalizer_.apply_all(ds.features);
  return ds;
}

}  // namespace ovfl
