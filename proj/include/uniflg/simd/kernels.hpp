#pragma once

// Dense double-precision kernels used by the autodiff engine.
//
// Every kernel has a scalar reference implementation (namespace `scalar`) and,
// on x86-64 builds, an AVX2/FMA variant (namespace `avx2`). The free functions
// in `uniflg::simd` dispatch to the variant selected at startup: the best ISA
// the CPU reports, unless UNIFLG_SIMD=scalar is set in the environment.
//
// All matrices are row-major with explicit leading dimensions. The gemm
// kernels accumulate into C (C += ...); callers zero C when needed.

#include <cstddef>

namespace uniflg::simd {

enum class Isa { kScalar, kAvx2 };

/// Best ISA supported by both this build and the running CPU.
Isa detected_isa();
/// ISA currently used by the dispatching entry points.
Isa active_isa();
/// Selects the dispatch target; requests above detected_isa() are clamped.
void set_active_isa(Isa isa);
const char* isa_name(Isa isa);

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
// C[m x n] += A^T * B, with A stored as k x m
void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
// C[m x n] += A * B^T, with B stored as n x k
void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// out[i] = sum over rows of a (rows x n), accumulated into out
void column_sums(int rows, int n, const double* a, int lda, double* out);

namespace scalar {
void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void column_sums(int rows, int n, const double* a, int lda, double* out);
}  // namespace scalar

namespace avx2 {
void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void column_sums(int rows, int n, const double* a, int lda, double* out);
}  // namespace avx2

}  // namespace uniflg::simd
