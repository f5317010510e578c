#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ovfl/matrix.hpp"

namespace ovfl {

enum class QuantKind { identity, uniform_scalar, hex_lattice };

const char* to_string(QuantKind kind);
QuantKind quant_kind_from_string(const std::string& name);

struct QuantizerSpec {
  QuantKind kind = QuantKind::uniform_scalar;
  int bits_per_component = 32;

  void validate() const;
  bool lossless() const {
    return kind == QuantKind::identity ||
           (kind == QuantKind::uniform_scalar && bits_per_component == 32);
  }
};

/// Reconstructed values plus the exact cost of shipping them.
struct QuantizedTensor {
  DenseMatrix reconstructed;
  long long payload_bits = 0;
  long long side_info_bits = 0;
};

inline long long bits_cost(const QuantizedTensor& q) {
  return q.payload_bits + q.side_info_bits;
}

/// Raw passthrough: values kept exact, each component billed at 32 bits.
QuantizedTensor quantize_identity(const DenseMatrix& x);

/// 2^b equal cells over the tensor's [min, max]; values reconstructed at cell
/// centers; the range ships as two 32-bit side values. b = 32 degenerates to
/// the exact passthrough.
QuantizedTensor quantize_uniform(const DenseMatrix& x, int bits);

/// Components are paired in order and mapped to the Euclidean-nearest point
/// of a scaled hexagonal-lattice codebook with 2^(2b) codewords; the scale
/// ships as one 32-bit side value. Odd-length tensors pad a zero that is
/// dropped again on reconstruction and excluded from the payload.
QuantizedTensor quantize_hex(const DenseMatrix& x, int bits);

QuantizedTensor quantize(const QuantizerSpec& spec, const DenseMatrix& x);

/// The 2^(2b) hexagonal lattice points nearest the origin, in codebook-index
/// order (norm, then lexicographic). Built once per b and cached.
struct HexCodebook {
  int bits;
  std::vector<std::array<double, 2>> points;
  double radius;  // largest codeword norm; the scale-to-cover reference

  /// Index of the nearest codeword; equidistant candidates resolve to the
  /// lowest index.
  size_t nearest(double x, double y) const;
};

const HexCodebook& hex_codebook(int bits);

}  // namespace ovfl
