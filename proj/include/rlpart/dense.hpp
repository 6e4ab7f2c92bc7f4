#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rlpart/error.hpp"

namespace rlpart {

// Row-major dense matrix of doubles. Rows index nodes when used as a feature
// matrix. Small sizes only; no BLAS.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  std::size_t size() const { return a.size(); }

  bool finite() const {
    for (double x : a)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline void check_dims(bool ok, const char* what) {
  if (!ok) throw DimensionMismatchError(what);
}

// C = A * B
inline Mat matmul(const Mat& A, const Mat& B) {
  check_dims(A.cols == B.rows, "matmul inner dimensions");
  Mat C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

// C = A^T * B
inline Mat matmul_tn(const Mat& A, const Mat& B) {
  check_dims(A.rows == B.rows, "matmul_tn inner dimensions");
  Mat C(A.cols, B.cols);
  for (int k = 0; k < A.rows; ++k)
    for (int i = 0; i < A.cols; ++i) {
      const double aki = A(k, i);
      if (aki == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += aki * B(k, j);
    }
  return C;
}

// C = A * B^T
inline Mat matmul_nt(const Mat& A, const Mat& B) {
  check_dims(A.cols == B.cols, "matmul_nt inner dimensions");
  Mat C(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < B.rows; ++j) {
      double s = 0;
      for (int k = 0; k < A.cols; ++k) s += A(i, k) * B(j, k);
      C(i, j) = s;
    }
  return C;
}

inline void add_inplace(Mat& A, const Mat& B) {
  check_dims(A.rows == B.rows && A.cols == B.cols, "add dimensions");
  for (std::size_t i = 0; i < A.a.size(); ++i) A.a[i] += B.a[i];
}

// adds the 1 x c bias row to every row of A
inline void add_row_bias(Mat& A, const Mat& b) {
  check_dims(b.rows == 1 && b.cols == A.cols, "bias dimensions");
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) A(i, j) += b(0, j);
}

inline Mat tanh_of(const Mat& A) {
  Mat T(A.rows, A.cols);
  for (std::size_t i = 0; i < A.a.size(); ++i) T.a[i] = std::tanh(A.a[i]);
  return T;
}

// dZ for Y = tanh(Z), given dY and cached Y
inline Mat tanh_backward(const Mat& dY, const Mat& Y) {
  Mat dZ(dY.rows, dY.cols);
  for (std::size_t i = 0; i < dY.a.size(); ++i) dZ.a[i] = dY.a[i] * (1.0 - Y.a[i] * Y.a[i]);
  return dZ;
}

// column sums as a 1 x c row (bias gradient)
inline Mat col_sums(const Mat& A) {
  Mat s(1, A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) s(0, j) += A(i, j);
  return s;
}

}  // namespace rlpart
