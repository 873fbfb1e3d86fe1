#pragma once
// Minimal dense row-major matrix and SPD solves for the ridge posterior.

#include <cstddef>
#include <vector>

namespace nflow::linalg {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// X^T X
Matrix gram(const Matrix& x);
/// X^T y
std::vector<double> xt_times(const Matrix& x, const std::vector<double>& y);
std::vector<double> times(const Matrix& x, const std::vector<double>& v);

/// Lower Cholesky factor of an SPD matrix. Throws Error if not SPD.
Matrix cholesky(const Matrix& a);
std::vector<double> cholesky_solve(const Matrix& l, std::vector<double> b);
/// diag(A^{-1}) from the factor of A.
std::vector<double> cholesky_inverse_diagonal(const Matrix& l);

}  // namespace nflow::linalg
