#pragma once

#include <cstdint>
#include <vector>

#include "ovfl/rng.hpp"

namespace ovfl {

/// Spatially smooth shadowing field: a GxG grid of mean attenuation values
/// (dB) in [0,10], bilinearly interpolated over the area. A sample at a point
/// is Normal(mean_at(point), noise_std).
struct ShadowingMap {
  int grid_size = 0;
  double area = 0.0;
  double noise_std = 0.0;
  std::vector<double> grid_means;  // row-major GxG

  double mean_at(double x, double y) const;
  double sample(Rng& rng, double x, double y) const {
    return rng.normal(mean_at(x, y), noise_std);
  }
};

/// Grid means drawn uniformly in [0,10] dB, then one 3x3 box-blur pass so
/// neighboring regions stay similar. Deterministic per seed.
ShadowingMap build_shadowing_map(std::uint64_t seed, int grid_size, double area,
                                 double noise_std);

}  // namespace ovfl
