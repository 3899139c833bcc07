#include <cstdlib>
#include <cstring>
#include <vector>

#include "kernels_impl.hpp"

namespace mblab::simd {

const Kernels* avx2_kernels() {
#if defined(MBLAB_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_kernels_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& active() {
  static const Kernels& chosen = []() -> const Kernels& {
    const char* env = std::getenv("MBLAB_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return scalar_kernels();
    if (const Kernels* k = avx2_kernels()) return *k;
    return scalar_kernels();
  }();
  return chosen;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

void gemm(const Kernels& kernels, Trans trans_a, Trans trans_b, std::size_t m, std::size_t n,
          std::size_t k, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  const std::size_t a_row = trans_a == Trans::kNo ? lda : 1;
  const std::size_t a_col = trans_a == Trans::kNo ? 1 : lda;
  if (trans_b == Trans::kNo) {
    kernels.gemm(m, n, k, a, a_row, a_col, b, ldb, beta, c, ldc);
    return;
  }
  // op(B) = B^T with B stored n x k; pack it k x n.
  thread_local std::vector<double> packed;
  packed.resize(k * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* src = b + j * ldb;
    for (std::size_t p = 0; p < k; ++p) packed[p * n + j] = src[p];
  }
  kernels.gemm(m, n, k, a, a_row, a_col, packed.data(), n, beta, c, ldc);
}

}  // namespace mblab::simd
