#include "ovfl/shadowing.hpp"

#include <algorithm>
#include <cmath>

#include "ovfl/errors.hpp"

namespace ovfl {

double ShadowingMap::mean_at(double x, double y) const {
  const int g = grid_size;
  // Node (i,j) sits at (j*area/(g-1), i*area/(g-1)); corners on the corners.
  const double step = area / (g - 1);
  double fx = std::clamp(x, 0.0, area) / step;
  double fy = std::clamp(y, 0.0, area) / step;
  int j0 = std::min(static_cast<int>(fx), g - 2);
  int i0 = std::min(static_cast<int>(fy), g - 2);
  const double tx = fx - j0;
  const double ty = fy - i0;
  const double m00 = grid_means[i0 * g + j0];
  const double m01 = grid_means[i0 * g + j0 + 1];
  const double m10 = grid_means[(i0 + 1) * g + j0];
  const double m11 = grid_means[(i0 + 1) * g + j0 + 1];
  return (1 - ty) * ((1 - tx) * m00 + tx * m01) + ty * ((1 - tx) * m10 + tx * m11);
}

ShadowingMap build_shadowing_map(std::uint64_t seed, int grid_size, double area,
                                 double noise_std) {
  if (grid_size < 2) throw ConfigError("shadowing grid_size must be >= 2");
  ShadowingMap map;
  map.grid_size = grid_size;
  map.area = area;
  map.noise_std = noise_std;
  map.grid_means.resize(static_cast<size_t>(grid_size) * grid_size);

  Rng rng(seed);
  for (double& v : map.grid_means) v = rng.uniform(0.0, 10.0);

  // One 3x3 box blur (mean of in-bounds neighbors): convex combination, so
  // values stay inside [0,10].
  std::vector<double> smoothed(map.grid_means.size());
  for (int i = 0; i < grid_size; ++i) {
    for (int j = 0; j < grid_size; ++j) {
      double acc = 0.0;
      int n = 0;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= grid_size || jj >= grid_size) continue;
          acc += map.grid_means[ii * grid_size + jj];
          ++n;
        }
      }
      smoothed[i * grid_size + j] = acc / n;
    }
  }
  map.grid_means = std::move(smoothed);
  return map;
}

}  // namespace ovfl
