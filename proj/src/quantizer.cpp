#include "ovfl/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>

#include "ovfl/errors.hpp"

namespace ovfl {

const char* to_string(QuantKind kind) {
  switch (kind) {
    case QuantKind::identity: return "identity";
    case QuantKind::uniform_scalar: return "uniform_scalar";
    case QuantKind::hex_lattice: return "hex_lattice";
  }
  return "?";
}

QuantKind quant_kind_from_string(const std::string& name) {
  if (name == "identity") return QuantKind::identity;
  if (name == "uniform_scalar") return QuantKind::uniform_scalar;
  if (name == "hex_lattice") return QuantKind::hex_lattice;
  throw ConfigError("quantizer.kind: unknown kind '" + name + "'");
}

void QuantizerSpec::validate() const {
  if (kind == QuantKind::identity) return;
  if (bits_per_component < 1 || bits_per_component > 32)
    throw ConfigError("quantizer.bits_per_component: must be in [1,32], got " +
                      std::to_string(bits_per_component));
  // 2^(2b) codewords are enumerated; past b=8 the codebook stops being a
  // table (b=2 and b=4 are the operating points anyway).
  if (kind == QuantKind::hex_lattice && bits_per_component > 8)
    throw ConfigError("quantizer.bits_per_component: hex_lattice supports at most 8 bits");
}

QuantizedTensor quantize_identity(const DenseMatrix& x) {
  QuantizedTensor q;
  q.reconstructed = x;
  q.payload_bits = static_cast<long long>(x.size()) * 32;
  q.side_info_bits = 0;
  return q;
}

QuantizedTensor quantize_uniform(const DenseMatrix& x, int bits) {
  if (bits < 1 || bits > 32)
    throw ConfigError("quantize_uniform: bits must be in [1,32]");
  if (bits == 32) return quantize_identity(x);  // "no quantization" point

  QuantizedTensor q;
  q.reconstructed = DenseMatrix(x.rows, x.cols);
  q.payload_bits = static_cast<long long>(x.size()) * bits;
  q.side_info_bits = 64;  // [lo, hi] as two 32-bit values
  if (x.size() == 0) return q;

  const auto [lo_it, hi_it] = std::minmax_element(x.data.begin(), x.data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    // Constant tensor: one cell, exact reconstruction.
    std::fill(q.reconstructed.data.begin(), q.reconstructed.data.end(), lo);
    return q;
  }
  const double levels = std::ldexp(1.0, bits);  // 2^b
  const double width = (hi - lo) / levels;
  for (size_t i = 0; i < x.data.size(); ++i) {
    double cell = std::floor((x.data[i] - lo) / width);
    cell = std::clamp(cell, 0.0, levels - 1.0);
    q.reconstructed.data[i] = lo + (cell + 0.5) * width;
  }
  return q;
}

namespace {

HexCodebook build_hex_codebook(int bits) {
  const size_t count = size_t{1} << (2 * bits);
  // Hexagonal lattice basis (1,0), (1/2, sqrt(3)/2); fundamental cell area
  // sqrt(3)/2, so ~pi r^2 / (sqrt(3)/2) points fit within radius r.
  const double need_radius = std::sqrt(static_cast<double>(count) *
                                       (std::sqrt(3.0) / 2.0) / 3.14159265358979323846);
  const int span = static_cast<int>(std::ceil(need_radius * 2.0)) + 3;

  std::vector<std::array<double, 2>> candidates;
  candidates.reserve(static_cast<size_t>(2 * span + 1) * (2 * span + 1));
  const double half = 0.5;
  const double root3_2 = std::sqrt(3.0) / 2.0;
  for (int a = -span; a <= span; ++a)
    for (int b = -span; b <= span; ++b)
      candidates.push_back({a + half * b, root3_2 * b});

  std::sort(candidates.begin(), candidates.end(),
            [](const std::array<double, 2>& p, const std::array<double, 2>& q) {
              const double np = p[0] * p[0] + p[1] * p[1];
              const double nq = q[0] * q[0] + q[1] * q[1];
              if (np != nq) return np < nq;
              if (p[0] != q[0]) return p[0] < q[0];
              return p[1] < q[1];
            });
  candidates.resize(count);

  HexCodebook cb;
  cb.bits = bits;
  cb.points = std::move(candidates);
  cb.radius = 0.0;
  for (const auto& p : cb.points)
    cb.radius = std::max(cb.radius, std::hypot(p[0], p[1]));
  return cb;
}

}  // namespace

const HexCodebook& hex_codebook(int bits) {
  static std::mutex mu;
  static std::map<int, HexCodebook> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(bits);
  if (it == cache.end()) it = cache.emplace(bits, build_hex_codebook(bits)).first;
  return it->second;
}

size_t HexCodebook::nearest(double x, double y) const {
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < points.size(); ++i) {
    const double dx = x - points[i][0];
    const double dy = y - points[i][1];
    const double d = dx * dx + dy * dy;
    if (d < best_d) {  // strict: ties keep the lower index
      best_d = d;
      best = i;
    }
  }
  return best;
}

QuantizedTensor quantize_hex(const DenseMatrix& x, int bits) {
  if (bits < 1 || bits > 8)
    throw ConfigError("quantize_hex: bits must be in [1,8]");

  QuantizedTensor q;
  q.reconstructed = DenseMatrix(x.rows, x.cols);
  q.payload_bits = static_cast<long long>(x.size()) * bits;  // 2b per full pair
  q.side_info_bits = 32;                                     // the scale
  if (x.size() == 0) return q;

  const size_t n = x.data.size();
  const size_t pairs = (n + 1) / 2;
  const auto pair_at = [&](size_t p) -> std::array<double, 2> {
    const double a = x.data[2 * p];
    const double b = (2 * p + 1 < n) ? x.data[2 * p + 1] : 0.0;  // zero pad
    return {a, b};
  };

  double max_norm = 0.0;
  for (size_t p = 0; p < pairs; ++p) {
    const auto v = pair_at(p);
    max_norm = std::max(max_norm, std::hypot(v[0], v[1]));
  }
  if (max_norm == 0.0) return q;  // origin is codeword 0; zeros stay zeros

  const HexCodebook& cb = hex_codebook(bits);
  const double scale = max_norm / cb.radius;
  for (size_t p = 0; p < pairs; ++p) {
    const auto v = pair_at(p);
    const size_t idx = cb.nearest(v[0] / scale, v[1] / scale);
    q.reconstructed.data[2 * p] = scale * cb.points[idx][0];
    if (2 * p + 1 < n) q.reconstructed.data[2 * p + 1] = scale * cb.points[idx][1];
  }
  return q;
}

QuantizedTensor quantize(const QuantizerSpec& spec, const DenseMatrix& x) {
  switch (spec.kind) {
    case QuantKind::identity: return quantize_identity(x);
    case QuantKind::uniform_scalar: return quantize_uniform(x, spec.bits_per_component);
    case QuantKind::hex_lattice: return quantize_hex(x, spec.bits_per_component);
  }
  throw ConfigError("quantize: bad kind");
}

}  // namespace ovfl
