#pragma once
// Dense arithmetic kernels used by the clustering and centrality inner loops.
//
// Every kernel has a scalar reference and, where the CPU allows it, an AVX2
// variant picked at runtime. The scalar reference mirrors the vector lane
// layout and reduction order, so both paths return bit-identical results:
// f32 products are formed exactly in f64 and the f64 kernels never fuse
// multiply-add. Set NARRATIVE_FLOW_SIMD=scalar to force the reference path.

#include <cstddef>
#include <string_view>

namespace nflow::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i], accumulated in f64.
  double (*dot_f32)(const float* a, const float* b, std::size_t n);
  // out[r] = dot(query, rows + r * dim) for r in [0, nrows).
  void (*dot_rows_f32)(const float* query, const float* rows, std::size_t nrows,
                       std::size_t dim, double* out);
  // acc[i] += x[i]
  void (*accumulate_f32)(double* acc, const float* x, std::size_t n);
  // y = A x, A row-major rows x cols.
  void (*gemv_f64)(const double* a, std::size_t rows, std::size_t cols, const double* x,
                   double* y);
};

bool isa_supported(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

/// Kernel table chosen once per process: the widest supported ISA unless
/// NARRATIVE_FLOW_SIMD=scalar is set.
const KernelTable& kernels() noexcept;

/// Explicit table. Throws std::runtime_error when the ISA is unavailable.
const KernelTable& kernels(Isa isa);

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(NFLOW_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table() noexcept;
#endif
}  // namespace detail

}  // namespace nflow::simd
