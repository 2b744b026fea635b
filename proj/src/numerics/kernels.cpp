#include "timrl/numerics/kernels.hpp"

#include <algorithm>

namespace timrl::kernels {

namespace {

// Row-major strides of op(a) and op(b).
inline double a_at(const GemmDims& d, const double* a, std::size_t i, std::size_t p) {
  return d.trans_a ? a[p * d.m + i] : a[i * d.k + p];
}

inline double b_at(const GemmDims& d, const double* b, std::size_t p, std::size_t j) {
  return d.trans_b ? b[j * d.k + p] : b[p * d.n + j];
}

void gemm_row(const GemmDims& d, const double* a, const double* b, double* c, std::size_t i,
              bool accumulate) {
  double* crow = c + i * d.n;
  if (!accumulate) std::fill(crow, crow + d.n, 0.0);
  if (!d.trans_b) {
    for (std::size_t p = 0; p < d.k; ++p) {
      const double av = a_at(d, a, i, p);
      const double* brow = b + p * d.n;
      for (std::size_t j = 0; j < d.n; ++j) crow[j] += av * brow[j];
    }
  } else {
    for (std::size_t p = 0; p < d.k; ++p) {
      const double av = a_at(d, a, i, p);
      for (std::size_t j = 0; j < d.n; ++j) crow[j] += av * b[j * d.k + p];
    }
  }
}

}  // namespace

void gemm_serial(const GemmDims& d, const double* a, const double* b, double* c,
                 bool accumulate) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double acc = accumulate ? c[i * d.n + j] : 0.0;
      for (std::size_t p = 0; p < d.k; ++p) acc += a_at(d, a, i, p) * b_at(d, b, p, j);
      c[i * d.n + j] = acc;
    }
  }
}

void gemm_parallel(const GemmDims& d, const double* a, const double* b, double* c,
                   bool accumulate) {
  const auto m = static_cast<long long>(d.m);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < m; ++i) gemm_row(d, a, b, c, static_cast<std::size_t>(i), accumulate);
}

void gemm(const GemmDims& d, const double* a, const double* b, double* c, bool accumulate) {
  if (d.m * d.n * d.k >= kParallelGemmThreshold && d.m > 1) {
    gemm_parallel(d, a, b, c, accumulate);
    return;
  }
  for (std::size_t i = 0; i < d.m; ++i) gemm_row(d, a, b, c, i, accumulate);
}

}  // namespace timrl::kernels
