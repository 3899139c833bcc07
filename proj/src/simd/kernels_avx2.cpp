// AVX2 + FMA kernels. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here may be called unless the dispatcher confirmed
// CPU support.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace mblab::simd {
namespace {

inline __m256i tail_mask(std::size_t rem) {
  const long long all = -1;
  return _mm256_setr_epi64x(rem > 0 ? all : 0, rem > 1 ? all : 0, rem > 2 ? all : 0, 0);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Cody-Waite range reduction followed by a degree-13 Taylor polynomial on
// |r| <= ln2/2; accurate to about one ulp over the clamped domain.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-700.0);
  const __m256d hi = _mm256_set1_pd(700.0);
  x = _mm256_max_pd(_mm256_min_pd(x, hi), lo);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(0.693147180369123816490), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
      1.0,                1.0};
  __m256d p = _mm256_set1_pd(kInvFact[0]);
  for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[i]));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i e = _mm256_cvtepi32_epi64(n32);
  e = _mm256_add_epi64(e, _mm256_set1_epi64x(1023));
  e = _mm256_slli_epi64(e, 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(e));
}

inline __m256d sigmoid_pd(__m256d z) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), z));
  return _mm256_div_pd(one, _mm256_add_pd(one, e));
}

inline double sigmoid_scalar(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// 4 x 8 register tile.
template <std::size_t Rows>
inline void tile8(std::size_t k, const double* a, std::size_t a_row, std::size_t a_col,
                  const double* b, std::size_t ldb, double beta, double* c, std::size_t ldc) {
  __m256d acc[Rows][2];
  for (std::size_t r = 0; r < Rows; ++r) acc[r][0] = acc[r][1] = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    for (std::size_t r = 0; r < Rows; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * a_row + p * a_col);
      acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) {
    double* cr = c + r * ldc;
    if (beta != 0.0) {
      acc[r][0] = _mm256_add_pd(_mm256_loadu_pd(cr), acc[r][0]);
      acc[r][1] = _mm256_add_pd(_mm256_loadu_pd(cr + 4), acc[r][1]);
    }
    _mm256_storeu_pd(cr, acc[r][0]);
    _mm256_storeu_pd(cr + 4, acc[r][1]);
  }
}

// Up to four columns; `cols` < 4 uses masked access.
template <std::size_t Rows>
inline void tile4(std::size_t k, std::size_t cols, const double* a, std::size_t a_row,
                  std::size_t a_col, const double* b, std::size_t ldb, double beta, double* c,
                  std::size_t ldc) {
  const __m256i mask = tail_mask(cols);
  const bool full = cols == 4;
  __m256d acc[Rows];
  for (std::size_t r = 0; r < Rows; ++r) acc[r] = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = full ? _mm256_loadu_pd(b + p * ldb) : _mm256_maskload_pd(b + p * ldb, mask);
    for (std::size_t r = 0; r < Rows; ++r) {
      acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * a_row + p * a_col), b0, acc[r]);
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) {
    double* cr = c + r * ldc;
    if (full) {
      if (beta != 0.0) acc[r] = _mm256_add_pd(_mm256_loadu_pd(cr), acc[r]);
      _mm256_storeu_pd(cr, acc[r]);
    } else {
      if (beta != 0.0) acc[r] = _mm256_add_pd(_mm256_maskload_pd(cr, mask), acc[r]);
      _mm256_maskstore_pd(cr, mask, acc[r]);
    }
  }
}

template <std::size_t Rows>
inline void row_block(std::size_t n, std::size_t k, const double* a, std::size_t a_row,
                      std::size_t a_col, const double* b, std::size_t ldb, double beta, double* c,
                      std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) tile8<Rows>(k, a, a_row, a_col, b + j, ldb, beta, c + j, ldc);
  for (; j < n; j += 4) {
    const std::size_t cols = n - j < 4 ? n - j : 4;
    tile4<Rows>(k, cols, a, a_row, a_col, b + j, ldb, beta, c + j, ldc);
  }
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t a_row,
               std::size_t a_col, const double* b, std::size_t ldb, double beta, double* c,
               std::size_t ldc) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    row_block<4>(n, k, a + i * a_row, a_row, a_col, b, ldb, beta, c + i * ldc, ldc);
  }
  switch (m - i) {
    case 3: row_block<3>(n, k, a + i * a_row, a_row, a_col, b, ldb, beta, c + i * ldc, ldc); break;
    case 2: row_block<2>(n, k, a + i * a_row, a_row, a_col, b, ldb, beta, c + i * ldc, ldc); break;
    case 1: row_block<1>(n, k, a + i * a_row, a_row, a_col, b, ldb, beta, c + i * ldc, ldc); break;
    default: break;
  }
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double squared_distance_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void swish_avx2(const double* z, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d zv = _mm256_loadu_pd(z + i);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(zv, sigmoid_pd(zv)));
  }
  for (; i < n; ++i) out[i] = z[i] * sigmoid_scalar(z[i]);
}

void swish_backward_avx2(const double* z, const double* g, double* out, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d zv = _mm256_loadu_pd(z + i);
    const __m256d s = sigmoid_pd(zv);
    const __m256d ds = _mm256_mul_pd(_mm256_mul_pd(zv, s), _mm256_sub_pd(one, s));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(g + i), _mm256_add_pd(s, ds)));
  }
  for (; i < n; ++i) {
    const double s = sigmoid_scalar(z[i]);
    out[i] = g[i] * (s + z[i] * s * (1.0 - s));
  }
}

void leaky_relu_avx2(const double* z, double slope, double* out, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d zv = _mm256_loadu_pd(z + i);
    const __m256d pos = _mm256_cmp_pd(zv, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(sv, zv), zv, pos));
  }
  for (; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : slope * z[i];
}

void leaky_relu_backward_avx2(const double* z, const double* g, double slope, double* out,
                              std::size_t n) {
  const __m256d sv = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(z + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(sv, gv), gv, pos));
  }
  for (; i < n; ++i) out[i] = z[i] > 0.0 ? g[i] : slope * g[i];
}

}  // namespace

const Kernels& avx2_kernels_unchecked() {
  static const Kernels kernels{
      Isa::kAvx2,      "avx2",          gemm_avx2,
      dot_avx2,        squared_distance_avx2,
      axpy_avx2,       swish_avx2,      swish_backward_avx2,
      leaky_relu_avx2, leaky_relu_backward_avx2,
  };
  return kernels;
}

}  // namespace mblab::simd
