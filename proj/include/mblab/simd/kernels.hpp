#pragma once

// Dense inner-loop kernels shared by the network, GP, and SVGD code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is chosen once per process from the CPU
// feature flags; setting MBLAB_SIMD=scalar in the environment forces the
// reference path. Both paths accumulate in the same index order, so they
// differ only by FMA rounding.

#include <cstddef>
#include <string_view>

namespace mblab::simd {

enum class Isa { kScalar, kAvx2 };

enum class Trans { kNo, kYes };

// C[m x n] = beta * C + A * B where A(i, k) = a[i * a_row + k * a_col] and
// B(k, j) = b[k * ldb + j]. beta must be 0 or 1; with beta == 0 the previous
// contents of C are never read.
using GemmKernel = void (*)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                            std::size_t a_row, std::size_t a_col, const double* b,
                            std::size_t ldb, double beta, double* c, std::size_t ldc);

struct Kernels {
  Isa isa;
  const char* name;
  GemmKernel gemm;
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = z[i] * sigmoid(z[i])
  void (*swish)(const double* z, double* out, std::size_t n);
  // out[i] = g[i] * d/dz swish(z[i])
  void (*swish_backward)(const double* z, const double* g, double* out, std::size_t n);
  void (*leaky_relu)(const double* z, double slope, double* out, std::size_t n);
  void (*leaky_relu_backward)(const double* z, const double* g, double slope, double* out,
                              std::size_t n);
};

const Kernels& scalar_kernels();

// Null when the binary was built without AVX2 support or the CPU lacks it.
const Kernels* avx2_kernels();

// Kernels used by the library. Selected on first call.
const Kernels& active();

std::string_view isa_name(Isa isa);

// Row-major GEMM front end: C = beta * C + op(A) * op(B), with op(A) m x k
// and op(B) k x n. Transposed B operands are packed before dispatch.
void gemm(const Kernels& kernels, Trans trans_a, Trans trans_b, std::size_t m, std::size_t n,
          std::size_t k, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc);

inline void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                 double* c, std::size_t ldc) {
  gemm(active(), trans_a, trans_b, m, n, k, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace mblab::simd
