#include "ovfl/matrix.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "ovfl/errors.hpp"

namespace ovfl {

DenseMatrix::DenseMatrix(int r, int c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<size_t>(r) * c)
    throw ShapeError("DenseMatrix: data length " + std::to_string(data.size()) +
                     " != " + std::to_string(r) + "x" + std::to_string(c));
}

namespace {

// Register-blocked GEMM: 4x32 accumulator tiles live in registers across the
// whole k loop, so each B element is loaded once per 4 output rows and C is
// touched once per tile. The fixed-size inner loops vectorize without any
// reassociation, keeping results bit-stable across runs.
constexpr int kRowBlock = 4;
constexpr int kColBlock = 32;

template <int Rows>
void gemm_tile(const double* a, const double* b, double* c, int k_dim, int n,
               int j0, int nb) {
  if (nb == kColBlock) {
    double acc[Rows][kColBlock];
    for (int r = 0; r < Rows; ++r)
      for (int j = 0; j < kColBlock; ++j) acc[r][j] = c[static_cast<size_t>(r) * n + j0 + j];
    for (int k = 0; k < k_dim; ++k) {
      const double* bk = b + static_cast<size_t>(k) * n + j0;
      for (int r = 0; r < Rows; ++r) {
        const double ark = a[static_cast<size_t>(r) * k_dim + k];
        for (int j = 0; j < kColBlock; ++j) acc[r][j] += ark * bk[j];
      }
    }
    for (int r = 0; r < Rows; ++r)
      for (int j = 0; j < kColBlock; ++j) c[static_cast<size_t>(r) * n + j0 + j] = acc[r][j];
  } else {
    double acc[Rows][kColBlock];
    for (int r = 0; r < Rows; ++r)
      for (int j = 0; j < nb; ++j) acc[r][j] = c[static_cast<size_t>(r) * n + j0 + j];
    for (int k = 0; k < k_dim; ++k) {
      const double* bk = b + static_cast<size_t>(k) * n + j0;
      for (int r = 0; r < Rows; ++r) {
        const double ark = a[static_cast<size_t>(r) * k_dim + k];
        for (int j = 0; j < nb; ++j) acc[r][j] += ark * bk[j];
      }
    }
    for (int r = 0; r < Rows; ++r)
      for (int j = 0; j < nb; ++j) c[static_cast<size_t>(r) * n + j0 + j] = acc[r][j];
  }
}

void gemm_acc(const double* a, const double* b, double* c, int m, int k_dim, int n) {
  for (int j0 = 0; j0 < n; j0 += kColBlock) {
    const int nb = std::min(kColBlock, n - j0);
    int i = 0;
    for (; i + kRowBlock <= m; i += kRowBlock)
      gemm_tile<kRowBlock>(a + static_cast<size_t>(i) * k_dim, b,
                           c + static_cast<size_t>(i) * n, k_dim, n, j0, nb);
    for (; i < m; ++i)
      gemm_tile<1>(a + static_cast<size_t>(i) * k_dim, b,
                   c + static_cast<size_t>(i) * n, k_dim, n, j0, nb);
  }
}

DenseMatrix transposed(const DenseMatrix& m) {
  DenseMatrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i) {
    const double* src = m.row(i);
    for (int j = 0; j < m.cols; ++j) t.data[static_cast<size_t>(j) * m.rows + i] = src[j];
  }
  return t;
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: inner dims " + std::to_string(a.cols) + " vs " +
                     std::to_string(b.rows));
  DenseMatrix c(a.rows, b.cols);
  gemm_acc(a.data.data(), b.data.data(), c.data.data(), a.rows, a.cols, b.cols);
  return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows)
    throw ShapeError("matmul_at_b: row counts " + std::to_string(a.rows) +
                     " vs " + std::to_string(b.rows));
  // Explicit transpose costs O(size) and buys the blocked kernel.
  const DenseMatrix at = transposed(a);
  DenseMatrix c(a.cols, b.cols);
  gemm_acc(at.data.data(), b.data.data(), c.data.data(), a.cols, a.rows, b.cols);
  return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.cols)
    throw ShapeError("matmul_a_bt: col counts " + std::to_string(a.cols) +
                     " vs " + std::to_string(b.cols));
  const DenseMatrix bt = transposed(b);
  DenseMatrix c(a.rows, b.rows);
  gemm_acc(a.data.data(), bt.data.data(), c.data.data(), a.rows, a.cols, b.rows);
  return c;
}

DenseMatrix hstack(const std::vector<DenseMatrix>& blocks) {
  if (blocks.empty()) return {};
  const int rows = blocks.front().rows;
  int cols = 0;
  for (const auto& b : blocks) {
    if (b.rows != rows) throw ShapeError("hstack: inconsistent row counts");
    cols += b.cols;
  }
  DenseMatrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double* dst = out.row(r);
    for (const auto& b : blocks) {
      const double* src = b.row(r);
      for (int c = 0; c < b.cols; ++c) *dst++ = src[c];
    }
  }
  return out;
}

DenseMatrix vstack(const std::vector<DenseMatrix>& blocks) {
  if (blocks.empty()) return {};
  const int cols = blocks.front().cols;
  int rows = 0;
  for (const auto& b : blocks) {
    if (b.cols != cols) throw ShapeError("vstack: inconsistent col counts");
    rows += b.rows;
  }
  DenseMatrix out(rows, cols);
  auto dst = out.data.begin();
  for (const auto& b : blocks) dst = std::copy(b.data.begin(), b.data.end(), dst);
  return out;
}

DenseMatrix slice_rows(const DenseMatrix& m, int first, int count) {
  if (first < 0 || count < 0 || first + count > m.rows)
    throw ShapeError("slice_rows: range out of bounds");
  DenseMatrix out(count, m.cols);
  std::copy(m.row(first), m.row(first) + static_cast<size_t>(count) * m.cols,
            out.data.begin());
  return out;
}

DenseMatrix slice_cols(const DenseMatrix& m, int first, int count) {
  if (first < 0 || count < 0 || first + count > m.cols)
    throw ShapeError("slice_cols: range out of bounds");
  DenseMatrix out(m.rows, count);
  for (int r = 0; r < m.rows; ++r)
    std::copy(m.row(r) + first, m.row(r) + first + count, out.row(r));
  return out;
}

void add_scaled(DenseMatrix& dst, const DenseMatrix& src, double scale) {
  if (!dst.same_shape(src)) throw ShapeError("add_scaled: shape mismatch");
  for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += scale * src.data[i];
}

bool all_finite(const DenseMatrix& m) {
  for (double v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
  double worst = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

}  // namespace ovfl
