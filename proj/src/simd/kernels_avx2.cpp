// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "nflow/simd/kernels.hpp"

namespace nflow::simd::detail {
namespace {

inline double reduce4(__m256d v) {
  alignas(32) double s[4];
  _mm256_store_pd(s, v);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double dot_f32(const float* a, const float* b, std::size_t n) {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    // Widened products are exact, so the fused add rounds like a plain add.
    lo = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                         _mm256_cvtps_pd(_mm256_castps256_ps128(vb)), lo);
    hi = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                         _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), hi);
  }
  double total = reduce4(_mm256_add_pd(lo, hi));
  for (; i < n; ++i) total += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return total;
}

void dot_rows_f32(const float* query, const float* rows, std::size_t nrows, std::size_t dim,
                  double* out) {
  for (std::size_t r = 0; r < nrows; ++r) out[r] = dot_f32(query, rows + r * dim, dim);
}

void accumulate_f32(double* acc, const float* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), vx));
  }
  for (; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

double dot_f64(const double* a, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(x + i)));
  }
  double total = reduce4(acc);
  for (; i < n; ++i) {
    const double p = a[i] * x[i];
    total = total + p;
  }
  return total;
}

void gemv_f64(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_f64(a + r * cols, x, cols);
}

constexpr KernelTable kTable{Isa::Avx2, &dot_f32, &dot_rows_f32, &accumulate_f32, &gemv_f64};

}  // namespace

const KernelTable& avx2_table() noexcept { return kTable; }

}  // namespace nflow::simd::detail
