#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ovfl/matrix.hpp"
#include "ovfl/rng.hpp"
#include "ovfl/shadowing.hpp"

namespace ovfl {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Geometry and sampling parameters of the sensing world.
struct WorldConfig {
  double area = 500.0;          // square side, meters
  int num_pus = 2;              // transmitters whose levels are predicted
  int num_sus = 4;              // sensing parties
  std::vector<Point> pu_positions;  // empty -> deterministic default placement
  double pathloss_exponent = 4.0;
  int slots_per_round = 40;
  int rss_per_slot = 100;
  int train_slots = 20;
  int test_slots = 20;
  double d_min = 1.0;           // distance clamp, keeps the log finite
  int shadow_grid = 10;
  double shadow_noise_std = 1.0;

  int feature_dim() const { return 2 + rss_per_slot; }
  void validate() const;
  /// PU n at (area*(n+1)/(N+1), area*(1-(n+1)/(N+1))) when none configured.
  std::vector<Point> resolved_pu_positions() const;
};

/// Waypoint polyline a party replays instead of the random walk.
struct Trace {
  std::vector<Point> waypoints;
  std::vector<double> cumulative_length;

  double total_length() const {
    return cumulative_length.empty() ? 0.0 : cumulative_length.back();
  }
  Point position_at(double distance) const;  // clamped to the endpoints
};

Trace make_trace(std::vector<Point> waypoints);
/// Rows "x_meters,y_meters", optional header row.
Trace load_trace_file(const std::string& path);

struct SuState {
  std::vector<Point> positions;
  std::vector<Trace> traces;           // empty -> random walk
  std::vector<double> trace_speeds;    // meters per round, one per party
  std::vector<double> trace_progress;  // distance traveled along each trace
};

/// One global round of data: per-party feature blocks (position + RSS
/// readings) sharing one label matrix of PU transmit levels; the first
/// train_rows slots train, the rest test.
struct RoundDataset {
  int round_index = 0;
  std::vector<DenseMatrix> features;  // per party, slots x (2 + rss_per_slot)
  DenseMatrix labels;                 // slots x num_pus
  int train_rows = 0;
  int test_rows = 0;

  std::vector<DenseMatrix> train_features() const;
  std::vector<DenseMatrix> test_features() const;
  DenseMatrix train_labels() const { return slice_rows(labels, 0, train_rows); }
  DenseMatrix test_labels() const { return slice_rows(labels, train_rows, test_rows); }
};

/// Log-distance path loss with per-PU shadowing terms:
/// sum_n (P_n - 10*phi*log10(max(d_n, d_min)) - shadow_n).
/// Returns the per-PU contributions; their sum is the received power.
std::vector<double> received_power_terms(const std::vector<int>& pu_levels,
                                         Point su_pos,
                                         const std::vector<Point>& pu_positions,
                                         double pathloss_exponent, double d_min,
                                         const std::vector<double>& shadow_values);
double received_power(const std::vector<int>& pu_levels, Point su_pos,
                      const std::vector<Point>& pu_positions,
                      double pathloss_exponent, double d_min,
                      const std::vector<double>& shadow_values);

/// Deterministic sensor deployment: an evenly spaced grid inset from the
/// borders, independent of the seed.
std::vector<Point> deployment_positions(int num_sus, double area);

/// Random walk: each party moves exactly v meters in a uniform heading,
/// reflecting at the area boundary. With traces loaded, each party advances
/// its per-round speed along its polyline instead.
void step_mobility(SuState& state, double v, double area, Rng& rng);

/// Sample one round at the current positions: per slot draw each PU's level
/// uniformly from {1,2,3,4}, then each party records rss_per_slot readings
/// with fresh shadowing noise per reading per PU.
RoundDataset sample_round(const WorldConfig& world, const ShadowingMap& shadow,
                          const SuState& state, int round_index, Rng& rng);

/// Per-party feature scaling: position dims map to [0,1] by 1/area, RSS dims
/// standardize with per-dim statistics fit on training rows and then held
/// fixed until the incoming stream drifts out of range (median |z| above the
/// recalibration threshold), at which point the statistics refit on the
/// current round. Slow-moving sensors keep one stable calibration for the
/// whole run; a bus route that shifts the readings by tens of dB recalibrates
/// every few rounds instead of feeding the network dead inputs. Each party
/// only touches its own raw stream.
class FeatureNormalizer {
 public:
  static constexpr double kRecalibrateMedianZ = 15.0;

  FeatureNormalizer() = default;
  /// Fit on the first round; afterwards refit only on out-of-range drift.
  void update(const RoundDataset& round, double area);
  bool fitted() const { return fitted_; }
  int recalibrations() const { return recalibrations_; }
  DenseMatrix apply(int party, const DenseMatrix& raw) const;
  std::vector<DenseMatrix> apply_all(const std::vector<DenseMatrix>& raw) const;

 private:
  bool fitted_ = false;
  int recalibrations_ = 0;
  double inv_area_ = 0.0;
  std::vector<std::vector<double>> mean_;   // per party, per dim
  std::vector<std::vector<double>> scale_;  // per party, per dim

  void fit_party(const RoundDataset& round, int party);
  double median_abs_z(const RoundDataset& round, int party) const;
};

/// Deterministic stream of rounds: mobility step + sampling + normalization,
/// all derived from one master seed.
class EnvironmentSim {
 public:
  EnvironmentSim(const WorldConfig& world, std::uint64_t master_seed);
  EnvironmentSim(const WorldConfig& world, std::uint64_t master_seed,
                 std::vector<Trace> traces, std::vector<double> trace_speeds,
                 double mobility_rate);
  /// Plain random-walk stream at mobility rate v.
  static EnvironmentSim random_walk(const WorldConfig& world, std::uint64_t seed,
                                    double v);

  /// Raw features; rounds are numbered from 1.
  RoundDataset next_round_raw();
  /// Raw round plus frozen-at-round-1 normalization applied to features.
  RoundDataset next_round();

  const WorldConfig& world() const { return world_; }
  const ShadowingMap& shadowing() const { return shadow_; }
  const SuState& su_state() const { return state_; }
  const FeatureNormalizer& normalizer() const { return normalizer_; }

 private:
  WorldConfig world_;
  std::vector<Point> pu_positions_;
  ShadowingMap shadow_;
  SuState state_;
  Rng stream_rng_;
  double mobility_rate_ = 1.0;
  int round_ = 0;
  FeatureNormalizer normalizer_;
};

}  // namespace ovfl
