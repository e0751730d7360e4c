#include <atomic>
#include <cstdlib>
#include <cstring>

#include "uniflg/simd/kernels.hpp"

namespace uniflg::simd {
namespace {

Isa probe_isa() {
#if defined(UNIFLG_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

Isa initial_isa() {
  const Isa best = probe_isa();
  if (const char* env = std::getenv("UNIFLG_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0)
    return Isa::kScalar;
  return best;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

bool use_avx2() {
#if defined(UNIFLG_HAVE_AVX2)
  return active().load(std::memory_order_relaxed) == Isa::kAvx2;
#else
  return false;
#endif
}

}  // namespace

Isa detected_isa() {
  static const Isa isa = probe_isa();
  return isa;
}

Isa active_isa() { return active().load(); }

void set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) isa = Isa::kScalar;
  active().store(isa);
}

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::kAvx2:
      return "avx2";
    case Isa::kScalar:
      break;
  }
  return "scalar";
}

#if defined(UNIFLG_HAVE_AVX2)
#define UNIFLG_DISPATCH(fn, ...) \
  (use_avx2() ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define UNIFLG_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc) {
  UNIFLG_DISPATCH(gemm_nn, m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc) {
  UNIFLG_DISPATCH(gemm_tn, m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
             int ldc) {
  UNIFLG_DISPATCH(gemm_nt, m, n, k, a, lda, b, ldb, c, ldc);
}

double dot(const double* a, const double* b, std::size_t n) { return UNIFLG_DISPATCH(dot, a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  UNIFLG_DISPATCH(axpy, alpha, x, y, n);
}

void column_sums(int rows, int n, const double* a, int lda, double* out) {
  UNIFLG_DISPATCH(column_sums, rows, n, a, lda, out);
}

#undef UNIFLG_DISPATCH

}  // namespace uniflg::simd
