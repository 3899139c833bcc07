#include <cmath>

#include "kernels_impl.hpp"

namespace mblab::simd {
namespace {

void gemm_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t a_row,
                 std::size_t a_col, const double* b, std::size_t ldb, double beta, double* c,
                 std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * a_row + p * a_col] * b[p * ldb + j];
      crow[j] = beta == 0.0 ? acc : crow[j] + acc;
    }
  }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double squared_distance_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void swish_scalar(const double* z, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i] * (1.0 / (1.0 + std::exp(-z[i])));
}

void swish_backward_scalar(const double* z, const double* g, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-z[i]));
    out[i] = g[i] * (s + z[i] * s * (1.0 - s));
  }
}

void leaky_relu_scalar(const double* z, double slope, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : slope * z[i];
}

void leaky_relu_backward_scalar(const double* z, const double* g, double slope, double* out,
                                std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? g[i] : slope * g[i];
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels kernels{
      Isa::kScalar,           "scalar",           gemm_scalar,
      dot_scalar,             squared_distance_scalar,
      axpy_scalar,            swish_scalar,       swish_backward_scalar,
      leaky_relu_scalar,      leaky_relu_backward_scalar,
  };
  return kernels;
}

}  // namespace mblab::simd
