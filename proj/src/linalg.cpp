#include "nflow/linalg.hpp"

#include <cmath>
#include <string>

#include "nflow/error.hpp"

namespace nflow::linalg {

Matrix gram(const Matrix& x) {
  Matrix g(x.cols, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t i = 0; i < x.cols; ++i) {
      const double xi = x(r, i);
      if (xi == 0.0) continue;
      for (std::size_t j = i; j < x.cols; ++j) g(i, j) += xi * x(r, j);
    }
  }
  for (std::size_t i = 0; i < x.cols; ++i) {
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  }
  return g;
}

std::vector<double> xt_times(const Matrix& x, const std::vector<double>& y) {
  std::vector<double> out(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) out[c] += x(r, c) * y[r];
  }
  return out;
}

std::vector<double> times(const Matrix& x, const std::vector<double>& v) {
  std::vector<double> out(x.rows, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) out[r] += x(r, c) * v[c];
  }
  return out;
}

Matrix cholesky(const Matrix& a) {
  if (a.rows != a.cols) throw Error("cholesky: matrix must be square");
  const std::size_t n = a.rows;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw Error("cholesky: matrix is not positive definite at pivot " + std::to_string(j));
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const Matrix& l, std::vector<double> b) {
  const std::size_t n = l.rows;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
    b[i] = s / l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
  return b;
}

std::vector<double> cholesky_inverse_diagonal(const Matrix& l) {
  const std::size_t n = l.rows;
  std::vector<double> diag(n, 0.0);
  std::vector<double> e(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::fill(e.begin(), e.end(), 0.0);
    e[c] = 1.0;
    diag[c] = cholesky_solve(l, e)[c];
  }
  return diag;
}

}  // namespace nflow::linalg
