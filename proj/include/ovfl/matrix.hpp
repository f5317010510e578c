#pragma once

#include <cstddef>
#include <vector>

namespace ovfl {

/// Row-major dense matrix of doubles. The single numeric carrier for
/// features, embeddings, labels and gradients.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  DenseMatrix(int r, int c, std::vector<double> values);

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

/// C = A * B.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// C = A^T * B (A is MxR, B is MxC, result RxC). Used for weight gradients.
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
/// C = A * B^T (A is MxC, B is RxC, result MxR). Used to push deltas back.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix hstack(const std::vector<DenseMatrix>& blocks);
DenseMatrix vstack(const std::vector<DenseMatrix>& blocks);
DenseMatrix slice_rows(const DenseMatrix& m, int first, int count);
DenseMatrix slice_cols(const DenseMatrix& m, int first, int count);

void add_scaled(DenseMatrix& dst, const DenseMatrix& src, double scale);
bool all_finite(const DenseMatrix& m);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace ovfl
