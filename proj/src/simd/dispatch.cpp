#include <cstdlib>
#include <stdexcept>
#include <string>

#include "nflow/simd/kernels.hpp"

namespace nflow::simd {

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(NFLOW_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

const KernelTable& kernels(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::runtime_error("SIMD kernels for " + std::string(isa_name(isa)) +
                             " are not available on this CPU");
  }
#if defined(NFLOW_HAVE_AVX2_KERNELS)
  if (isa == Isa::Avx2) return detail::avx2_table();
#endif
  return detail::scalar_table();
}

const KernelTable& kernels() noexcept {
  static const KernelTable& table = [] () -> const KernelTable& {
    const char* forced = std::getenv("NARRATIVE_FLOW_SIMD");
    if (forced != nullptr && std::string(forced) == "scalar") return detail::scalar_table();
    if (isa_supported(Isa::Avx2)) return kernels(Isa::Avx2);
    return detail::scalar_table();
  }();
  return table;
}

}  // namespace nflow::simd
