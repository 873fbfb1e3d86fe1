#include "nflow/simd/kernels.hpp"

namespace nflow::simd::detail {
namespace {

// Lane layout shared with the AVX2 path: 8 f32 lanes widened into two
// 4-wide f64 accumulators, reduced as ((l0+l4)+(l1+l5)) + ((l2+l6)+(l3+l7)).
double dot_f32(const float* a, const float* b, std::size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      acc[l] += static_cast<double>(a[i + l]) * static_cast<double>(b[i + l]);
    }
  }
  const double s0 = acc[0] + acc[4];
  const double s1 = acc[1] + acc[5];
  const double s2 = acc[2] + acc[6];
  const double s3 = acc[3] + acc[7];
  double total = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) total += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return total;
}

void dot_rows_f32(const float* query, const float* rows, std::size_t nrows, std::size_t dim,
                  double* out) {
  for (std::size_t r = 0; r < nrows; ++r) out[r] = dot_f32(query, rows + r * dim, dim);
}

void accumulate_f32(double* acc, const float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

double dot_f64(const double* a, const double* x, std::size_t n) {
  double acc[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double p = a[i + l] * x[i + l];
      acc[l] = acc[l] + p;
    }
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (; i < n; ++i) {
    const double p = a[i] * x[i];
    total = total + p;
  }
  return total;
}

void gemv_f64(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_f64(a + r * cols, x, cols);
}

constexpr KernelTable kTable{Isa::Scalar, &dot_f32, &dot_rows_f32, &accumulate_f32, &gemv_f64};

}  // namespace

const KernelTable& scalar_table() noexcept { return kTable; }

}  // namespace nflow::simd::detail
