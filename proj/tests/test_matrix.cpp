#include "doctest.h"
#include "ovfl/errors.hpp"
#include "ovfl/matrix.hpp"
#include "ovfl/rng.hpp"

using namespace ovfl;

namespace {

DenseMatrix random_matrix(int r, int c, Rng& rng) {
  DenseMatrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-2.0, 2.0);
  return m;
}

// Naive triple loop, independent of the library kernels.
DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

}  // namespace

TEST_CASE("matmul variants agree with the naive oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform_index(8));
    const int k = 1 + static_cast<int>(rng.uniform_index(8));
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    DenseMatrix a = random_matrix(m, k, rng);
    DenseMatrix b = random_matrix(k, n, rng);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);

    DenseMatrix a2 = random_matrix(k, m, rng);
    DenseMatrix at(m, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < m; ++j) at(j, i) = a2(i, j);
    CHECK(max_abs_diff(matmul_at_b(a2, b), naive_matmul(at, b)) < 1e-12);

    DenseMatrix bt = random_matrix(n, k, rng);
    DenseMatrix btt(k, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) btt(j, i) = bt(i, j);
    DenseMatrix lhs = random_matrix(m, k, rng);
    CHECK(max_abs_diff(matmul_a_bt(lhs, bt), naive_matmul(lhs, btt)) < 1e-12);
  }
}

TEST_CASE("matmul rejects mismatched shapes") {
  DenseMatrix a(2, 3), b(4, 2);
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("hstack and vstack lay blocks out in order") {
  DenseMatrix a(2, 1, {1, 2});
  DenseMatrix b(2, 2, {3, 4, 5, 6});
  DenseMatrix h = hstack({a, b});
  CHECK(h.rows == 2);
  CHECK(h.cols == 3);
  CHECK(h(0, 0) == 1);
  CHECK(h(0, 1) == 3);
  CHECK(h(1, 2) == 6);

  DenseMatrix v = vstack({b, b});
  CHECK(v.rows == 4);
  CHECK(v(2, 0) == 3);

  DenseMatrix s = slice_rows(v, 1, 2);
  CHECK(s.rows == 2);
  CHECK(s(0, 0) == 5);
  DenseMatrix c = slice_cols(h, 1, 2);
  CHECK(c(0, 0) == 3);
  CHECK(c(1, 1) == 6);
}

TEST_CASE("all_finite flags NaN and Inf") {
  DenseMatrix m(1, 2, {1.0, 2.0});
  CHECK(all_finite(m));
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(all_finite(m));
}
