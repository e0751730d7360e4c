#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "json.hpp"
#include "uniflg/io.hpp"
#include "uniflg/mas.hpp"
#include "uniflg/mas_kernel_abi.h"
#include "uniflg/rng.hpp"

using namespace uniflg;
using namespace uniflg::mas;
namespace fs = std::filesystem;

namespace {

Matrix random_lattice(Rng& rng, int S, int T, bool integer_grid) {
  Matrix m(S, T);
  for (double& v : m.data) v = integer_grid ? -rng.uniform_int(0, 2) : rng.uniform(-6.0, 0.0);
  return m;
}

void expect_valid(const AlignmentResult& r, int S, int T) {
  REQUIRE(static_cast<int>(r.durations.size()) == S);
  CHECK(std::accumulate(r.durations.begin(), r.durations.end(), 0) == T);
  for (int d : r.durations) CHECK(d >= 1);
  REQUIRE(static_cast<int>(r.path.size()) == T);
  CHECK(r.path.front() == 0);
  CHECK(r.path.back() == S - 1);
  for (int t = 1; t < T; ++t) CHECK((r.path[t] == r.path[t - 1] || r.path[t] == r.path[t - 1] + 1));
}

// log of the Gaussian density, written from the textbook pdf.
double log_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::log(std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi)));
}

}  // namespace

TEST_CASE("lattice entries are Gaussian log densities") {
  PriorStats p{Matrix(1, 1), Matrix(1, 1)};
  p.mu(0, 0) = 0.7;
  Matrix fz(1, 1);
  fz(0, 0) = 0.7;
  CHECK(loglik_lattice(fz, p)(0, 0) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));

  const int D = 3;
  PriorStats q{Matrix(1, D), Matrix(1, D)};
  Matrix at_mean(1, D);
  const double base = loglik_lattice(at_mean, q)(0, 0);
  const double k = 2.5;
  for (double& v : q.log_sigma.data) v = std::log(k);
  CHECK(loglik_lattice(at_mean, q)(0, 0) - base == doctest::Approx(-D * std::log(k)));

  Rng rng(4);
  PriorStats r{Matrix(3, 2), Matrix(3, 2)};
  for (double& v : r.mu.data) v = rng.normal();
  for (double& v : r.log_sigma.data) v = rng.uniform(-0.5, 0.5);
  Matrix z(5, 2);
  for (double& v : z.data) v = rng.normal();
  const Matrix L = loglik_lattice(z, r);
  REQUIRE(L.rows == 3);
  REQUIRE(L.cols == 5);
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < 5; ++t) {
      double want = 0.0;
      for (int d = 0; d < 2; ++d) want += log_density(z(t, d), r.mu(s, d), std::exp(r.log_sigma(s, d)));
      CHECK(std::abs(L(s, t) - want) < 1e-10);
    }
  CHECK_THROWS_AS(loglik_lattice(Matrix(2, 2), r), std::invalid_argument);
  CHECK_THROWS_AS(loglik_lattice(Matrix(5, 3), r), std::invalid_argument);
}

TEST_CASE("small alignments by hand") {
  Rng rng(1);
  const Matrix one = random_lattice(rng, 1, 7, false);
  CHECK(mas_align(one).durations == std::vector<int>{7});
  CHECK(brute_force_align(one).durations == std::vector<int>{7});

  // token 0 likes frames 0-1, token 1 likes frame 2; the only rival is [1, 2]
  const Matrix two = Matrix::from_rows({{-1.0, -1.0, -5.0}, {-5.0, -4.0, -1.0}});
  CHECK(path_score(two, {2, 1}) > path_score(two, {1, 2}));
  CHECK(mas_align(two).durations == std::vector<int>{2, 1});
  CHECK(mas_align(two).total_log_likelihood == -3.0);

  const Matrix uniform(3, 4, -2.0);
  for (const auto& d : {std::vector<int>{2, 1, 1}, {1, 2, 1}, {1, 1, 2}}) CHECK(path_score(uniform, d) == -8.0);
  CHECK(mas_align(uniform).durations == std::vector<int>{1, 1, 2});
  CHECK(brute_force_align(uniform).durations == std::vector<int>{1, 1, 2});

  const Matrix square = random_lattice(rng, 5, 5, false);
  CHECK(mas_align(square).durations == std::vector<int>(5, 1));
  CHECK(brute_force_align(square).durations == std::vector<int>(5, 1));

  CHECK_THROWS_AS(mas_align(Matrix(4, 3)), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_align(Matrix(2, 15)), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_align(Matrix(9, 12)), std::invalid_argument);
}

TEST_CASE("mas_align equals brute force on 1000 random lattices") {
  Rng rng(77);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int S = rng.uniform_int(1, 6);
    const int T = rng.uniform_int(S, 12);
    const Matrix L = random_lattice(rng, S, T, trial % 3 == 0);
    const AlignmentResult a = mas_align(L);
    const AlignmentResult b = brute_force_align(L);
    expect_valid(a, S, T);
    if (a.durations != b.durations || a.total_log_likelihood != b.total_log_likelihood) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("constant shift leaves the alignment unchanged") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int S = rng.uniform_int(1, 6), T = rng.uniform_int(S, 12);
    const Matrix L = random_lattice(rng, S, T, false);
    Matrix shifted = L;
    const double c = rng.uniform(-3.0, 3.0);
    for (double& v : shifted.data) v += c;
    const AlignmentResult a = mas_align(L), b = mas_align(shifted);
    CHECK(a.durations == b.durations);
    CHECK(b.total_log_likelihood == doctest::Approx(a.total_log_likelihood + T * c).epsilon(1e-12));
  }
}

TEST_CASE("C reference boundary") {
  const std::vector<float> lat = {-1, -1, -5, -5, -4, -1};
  std::vector<int32_t> d(2);
  CHECK(uniflg_mas_align_reference(lat.data(), 2, 3, d.data()) == 0);
  CHECK(d == std::vector<int32_t>{2, 1});
  CHECK(uniflg_mas_align_reference(lat.data(), 3, 2, d.data()) == 1);
  CHECK(uniflg_mas_align_reference(nullptr, 2, 3, d.data()) == 1);
}

TEST_CASE("kernel loader selects, validates and falls back") {
  KernelInfo info = select_kernel("reference");
  CHECK_FALSE(info.accelerated);
  CHECK(info.name == "reference");

  info = select_kernel("/nonexistent/libnothing.so");
  CHECK_FALSE(info.accelerated);
  CHECK(info.diagnostic.find("cannot load") != std::string::npos);

  info = select_kernel(UNIFLG_STUB_KERNEL_BAD_ABI);
  CHECK_FALSE(info.accelerated);
  CHECK(info.diagnostic.find("ABI version") != std::string::npos);

  info = select_kernel(UNIFLG_STUB_KERNEL);
  REQUIRE(info.accelerated);
  CHECK(active_kernel().accelerated);
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int S = rng.uniform_int(1, 20), T = rng.uniform_int(S, 80);
    // float-exact entries so both sides see the same lattice
    Matrix L = random_lattice(rng, S, T, trial % 2 == 0);
    for (double& v : L.data) v = static_cast<float>(v);
    const AlignmentResult fast = align(L), ref = mas_align(L);
    CHECK(fast.durations == ref.durations);
    CHECK(fast.total_log_likelihood == ref.total_log_likelihood);
  }
  select_kernel("reference");
  CHECK_FALSE(active_kernel().accelerated);
}

TEST_CASE("lattice dump and conformance corpus") {
  const fs::path dir = fs::temp_directory_path() / "uniflg_test_mas_corpus";
  fs::remove_all(dir);
  Rng rng(2);
  Matrix L = random_lattice(rng, 3, 9, false);
  for (double& v : L.data) v = static_cast<float>(v);
  write_lattice(dir / "one.f32", L);
  const auto bytes = io::read_bytes(dir / "one.f32");
  REQUIRE(bytes.size() == 16 + 4 * 27);
  CHECK(bytes[0] == 'U');
  CHECK(bytes[3] == 2);
  CHECK(max_abs_diff(read_lattice(dir / "one.f32"), L) == 0.0);

  write_conformance_corpus(dir / "corpus", 40, 5, 16, 64);
  std::ifstream in(dir / "corpus" / "expected.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const Matrix lat = read_lattice(dir / "corpus" / j["file"].get<std::string>());
    const int S = j["S"], T = j["T"];
    REQUIRE(lat.rows == S);
    REQUIRE(lat.cols == T);
    const std::vector<float> buf(lat.data.begin(), lat.data.end());
    std::vector<int32_t> d(S);
    REQUIRE(uniflg_mas_align_reference(buf.data(), S, T, d.data()) == 0);
    CHECK(std::vector<int>(d.begin(), d.end()) == j["durations"].get<std::vector<int>>());
    ++n;
  }
  CHECK(n == 40);
  fs::remove_all(dir);
}
