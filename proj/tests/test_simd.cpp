#include <cmath>
#include <vector>

#include "doctest.h"
#include "uniflg/rng.hpp"
#include "uniflg/simd/kernels.hpp"

using namespace uniflg;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
  return worst;
}

using GemmFn = void (*)(int, int, int, const double*, int, const double*, int, double*, int);

void check_gemm(GemmFn ref, GemmFn fast, bool a_trans, bool b_trans) {
  Rng rng(11);
  const int dims[] = {1, 3, 4, 5, 8, 9, 17, 33};
  for (int m : dims)
    for (int n : dims)
      for (int k : dims) {
        const int a_rows = a_trans ? k : m, a_cols = a_trans ? m : k;
        const int b_rows = b_trans ? n : k, b_cols = b_trans ? k : n;
        auto a = random_vec(rng, static_cast<std::size_t>(a_rows) * a_cols);
        auto b = random_vec(rng, static_cast<std::size_t>(b_rows) * b_cols);
        auto c0 = random_vec(rng, static_cast<std::size_t>(m) * n);
        auto c1 = c0;
        ref(m, n, k, a.data(), a_cols, b.data(), b_cols, c0.data(), n);
        fast(m, n, k, a.data(), a_cols, b.data(), b_cols, c1.data(), n);
        INFO("m=" << m << " n=" << n << " k=" << k);
        CHECK(max_rel(c0, c1) < 1e-13 * (k + 1));
      }
}

}  // namespace

TEST_CASE("dispatcher reports a usable ISA and honours overrides") {
  const simd::Isa best = simd::detected_isa();
  simd::set_active_isa(simd::Isa::kScalar);
  CHECK(simd::active_isa() == simd::Isa::kScalar);
  simd::set_active_isa(simd::Isa::kAvx2);
  CHECK(simd::active_isa() == best);
  CHECK(std::string(simd::isa_name(simd::Isa::kScalar)) == "scalar");
}

#if defined(__x86_64__)
TEST_CASE("avx2 kernels match the scalar reference") {
  if (simd::detected_isa() != simd::Isa::kAvx2) {
    MESSAGE("AVX2 not available on this CPU; equivalence sweep skipped");
    return;
  }
  SUBCASE("gemm_nn") { check_gemm(simd::scalar::gemm_nn, simd::avx2::gemm_nn, false, false); }
  SUBCASE("gemm_tn") { check_gemm(simd::scalar::gemm_tn, simd::avx2::gemm_tn, true, false); }
  SUBCASE("gemm_nt") { check_gemm(simd::scalar::gemm_nt, simd::avx2::gemm_nt, false, true); }
  SUBCASE("vector kernels") {
    Rng rng(5);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 1001u}) {
      auto x = random_vec(rng, n);
      auto y = random_vec(rng, n);
      CHECK(std::abs(simd::scalar::dot(x.data(), y.data(), n) - simd::avx2::dot(x.data(), y.data(), n)) <
            1e-12 * (n + 1));
      auto y0 = y, y1 = y;
      simd::scalar::axpy(0.37, x.data(), y0.data(), n);
      simd::avx2::axpy(0.37, x.data(), y1.data(), n);
      CHECK(max_rel(y0, y1) < 1e-15);
    }
    for (int rows : {1, 2, 13}) {
      for (int cols : {1, 4, 6, 19}) {
        auto a = random_vec(rng, static_cast<std::size_t>(rows) * cols);
        std::vector<double> s0(cols, 0.5), s1(cols, 0.5);
        simd::scalar::column_sums(rows, cols, a.data(), cols, s0.data());
        simd::avx2::column_sums(rows, cols, a.data(), cols, s1.data());
        CHECK(max_rel(s0, s1) < 1e-14);
      }
    }
  }
}
#endif

TEST_CASE("gemm with leading dimensions wider than the operand") {
  // C(2x2) += A(2x3, lda 5) * B(3x2, ldb 4) into ldc 3
  std::vector<double> a = {1, 2, 3, 99, 99, 4, 5, 6, 99, 99};
  std::vector<double> b = {1, 0, 99, 99, 0, 1, 99, 99, 1, 1, 99, 99};
  std::vector<double> c(6, 0.0);
  simd::gemm_nn(2, 2, 3, a.data(), 5, b.data(), 4, c.data(), 3);
  CHECK(c[0] == 4);
  CHECK(c[1] == 5);
  CHECK(c[3] == 10);
  CHECK(c[4] == 11);
  CHECK(c[2] == 0);
}
