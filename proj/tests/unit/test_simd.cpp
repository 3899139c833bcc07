#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "mblab/core/rng.hpp"
#include "mblab/simd/kernels.hpp"

using namespace mblab;
using simd::Trans;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * uniform(rng, -1.0, 1.0);
  return v;
}

// Plain triple loop, independent of both kernel sets.
std::vector<double> naive_gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                               const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::kNo ? a[i * k + p] : a[p * m + i];
        const double bv = tb == Trans::kNo ? b[p * n + j] : b[j * k + p];
        acc += static_cast<long double>(av) * bv;
      }
      c[i * n + j] = static_cast<double>(acc);
    }
  return c;
}

std::vector<const simd::Kernels*> all_kernels() {
  std::vector<const simd::Kernels*> out{&simd::scalar_kernels()};
  if (const auto* k = simd::avx2_kernels()) out.push_back(k);
  return out;
}

}  // namespace

TEST_CASE("gemm matches a naive product for every transpose and ragged shape") {
  Rng rng(7);
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 8, 16}, {7, 13, 31}, {64, 64, 64}, {9, 1, 22}, {5, 3, 0}};
  for (const auto* kern : all_kernels()) {
    CAPTURE(kern->name);
    for (const auto& s : shapes) {
      const std::size_t m = s[0], n = s[1], k = s[2];
      for (Trans ta : {Trans::kNo, Trans::kYes}) {
        for (Trans tb : {Trans::kNo, Trans::kYes}) {
          const auto a = random_vec(m * k, rng);
          const auto b = random_vec(k * n, rng);
          const auto expected = naive_gemm(ta, tb, m, n, k, a, b);
          std::vector<double> c(m * n, 123.0);
          simd::gemm(*kern, ta, tb, m, n, k, a.data(), ta == Trans::kNo ? k : m, b.data(),
                     tb == Trans::kNo ? n : k, 0.0, c.data(), n);
          for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-12));

          // beta = 1 accumulates.
          std::vector<double> acc(m * n, 0.5);
          simd::gemm(*kern, ta, tb, m, n, k, a.data(), ta == Trans::kNo ? k : m, b.data(),
                     tb == Trans::kNo ? n : k, 1.0, acc.data(), n);
          for (std::size_t i = 0; i < acc.size(); ++i) CHECK(acc[i] == doctest::Approx(expected[i] + 0.5).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const auto* avx = simd::avx2_kernels();
  if (avx == nullptr) {
    MESSAGE("AVX2 unavailable; only the scalar path is exercised");
    return;
  }
  const auto& ref = simd::scalar_kernels();
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 1000u}) {
    CAPTURE(n);
    const auto x = random_vec(n, rng, 10.0);
    const auto y = random_vec(n, rng, 10.0);
    CHECK(avx->dot(x.data(), y.data(), n) == doctest::Approx(ref.dot(x.data(), y.data(), n)).epsilon(1e-12));
    CHECK(avx->squared_distance(x.data(), y.data(), n) ==
          doctest::Approx(ref.squared_distance(x.data(), y.data(), n)).epsilon(1e-12));

    auto y1 = y, y2 = y;
    ref.axpy(0.3, x.data(), y1.data(), n);
    avx->axpy(0.3, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-14));

    std::vector<double> o1(n), o2(n);
    ref.swish(x.data(), o1.data(), n);
    avx->swish(x.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(o2[i] - o1[i]) <= 1e-14 * (1.0 + std::abs(o1[i])));

    ref.swish_backward(x.data(), y.data(), o1.data(), n);
    avx->swish_backward(x.data(), y.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(o2[i] - o1[i]) <= 1e-13 * (1.0 + std::abs(o1[i])));

    ref.leaky_relu(x.data(), 0.01, o1.data(), n);
    avx->leaky_relu(x.data(), 0.01, o2.data(), n);
    CHECK(o1 == o2);
    ref.leaky_relu_backward(x.data(), y.data(), 0.01, o1.data(), n);
    avx->leaky_relu_backward(x.data(), y.data(), 0.01, o2.data(), n);
    CHECK(o1 == o2);
  }
}

TEST_CASE("vectorized swish stays accurate over a wide argument range") {
  const auto* avx = simd::avx2_kernels();
  if (avx == nullptr) return;
  std::vector<double> z;
  for (double v = -750.0; v <= 750.0; v += 0.37) z.push_back(v);
  std::vector<double> out(z.size());
  avx->swish(z.data(), out.data(), z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double expected = z[i] / (1.0 + std::exp(-z[i]));
    CHECK(std::abs(out[i] - expected) <= 1e-15 * std::abs(expected) + 1e-300);
  }
}

TEST_CASE("dispatcher honours the active selection") {
  const auto& k = simd::active();
  CHECK((k.isa == simd::Isa::kScalar || k.isa == simd::Isa::kAvx2));
  CHECK(simd::isa_name(k.isa) == std::string_view(k.name));
}
