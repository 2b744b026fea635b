#pragma once

#include <cstddef>

namespace timrl::kernels {

/// Operand layout for gemm: `op(a)` is m×k, `op(b)` is k×n, c is m×n.
struct GemmDims {
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t n = 0;
  bool trans_a = false;
  bool trans_b = false;
};

/// c (+)= op(a)·op(b). Reference implementation, single thread.
void gemm_serial(const GemmDims& dims, const double* a, const double* b, double* c,
                 bool accumulate);

/// Same contract, rows of c split across OpenMP threads. Every output
/// element is summed in the same order as gemm_serial, so results match bit
/// for bit.
void gemm_parallel(const GemmDims& dims, const double* a, const double* b, double* c,
                   bool accumulate);

/// Dispatches to gemm_parallel above a work threshold.
void gemm(const GemmDims& dims, const double* a, const double* b, double* c, bool accumulate);

/// Multiply-add count above which gemm goes parallel.
inline constexpr std::size_t kParallelGemmThreshold = 1u << 16;

}  // namespace timrl::kernels
