#include "uniflg/mas.hpp"

#include <dlfcn.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "uniflg/io.hpp"
#include "uniflg/mas_kernel_abi.h"
#include "uniflg/rng.hpp"

namespace uniflg::mas {

namespace {

void check_lattice(const Matrix& lattice) {
  if (lattice.rows < 1) throw std::invalid_argument("alignment needs at least one token");
  if (lattice.cols < lattice.rows)
    throw std::invalid_argument("alignment impossible: " + std::to_string(lattice.cols) +
                                " frames for " + std::to_string(lattice.rows) + " tokens (T < S)");
}

AlignmentResult finish(const Matrix& lattice, std::vector<int> durations) {
  AlignmentResult r;
  r.path = durations_to_path(durations);
  r.total_log_likelihood = path_score(lattice, durations);
  r.durations = std::move(durations);
  return r;
}

}  // namespace

Matrix loglik_lattice(const Matrix& fz, const PriorStats& prior) {
  const int s_count = prior.tokens(), t_count = fz.rows, dim = fz.cols;
  if (s_count < 1) throw std::invalid_argument("loglik_lattice: empty prior");
  if (!prior.log_sigma.same_shape(prior.mu)) throw std::invalid_argument("loglik_lattice: prior shape mismatch");
  if (dim != prior.dim())
    throw std::invalid_argument("loglik_lattice: latent dim " + std::to_string(dim) +
                                " != prior dim " + std::to_string(prior.dim()));
  if (t_count < s_count) throw std::invalid_argument("loglik_lattice: T < S");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Matrix out(s_count, t_count);
  std::vector<double> inv_var(dim), base(s_count);
  for (int s = 0; s < s_count; ++s) {
    double b = 0.0;
    for (int d = 0; d < dim; ++d) b -= half_log_2pi + prior.log_sigma(s, d);
    base[s] = b;
  }
  for (int s = 0; s < s_count; ++s) {
    for (int d = 0; d < dim; ++d) inv_var[d] = std::exp(-2.0 * prior.log_sigma(s, d));
    const double* mu = prior.mu.row_ptr(s);
    for (int t = 0; t < t_count; ++t) {
      const double* z = fz.row_ptr(t);
      double q = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double diff = z[d] - mu[d];
        q += diff * diff * inv_var[d];
      }
      out(s, t) = base[s] - 0.5 * q;
    }
  }
  return out;
}

std::vector<int> durations_to_path(const std::vector<int>& durations) {
  std::vector<int> path;
  for (std::size_t s = 0; s < durations.size(); ++s) path.insert(path.end(), durations[s], static_cast<int>(s));
  return path;
}

double path_score(const Matrix& lattice, const std::vector<int>& durations) {
  double score = 0.0;
  int t = 0;
  for (std::size_t s = 0; s < durations.size(); ++s)
    for (int k = 0; k < durations[s]; ++k, ++t) score += lattice(static_cast<int>(s), t);
  return score;
}

AlignmentResult mas_align(const Matrix& lattice) {
  check_lattice(lattice);
  const int S = lattice.rows, T = lattice.cols;
  std::vector<double> q(static_cast<std::size_t>(S) * T, kNegInf);
  auto Q = [&](int s, int t) -> double& { return q[static_cast<std::size_t>(s) * T + t]; };
  Q(0, 0) = lattice(0, 0);
  for (int t = 1; t < T; ++t) {
    const int top = std::min(S - 1, t);
    for (int s = 0; s <= top; ++s) {
      const double stay = s <= t - 1 ? Q(s, t - 1) : kNegInf;
      const double move = s > 0 ? Q(s - 1, t - 1) : kNegInf;
      Q(s, t) = std::max(stay, move) + lattice(s, t);
    }
  }
  std::vector<int> durations(S, 0);
  int s = S - 1;
  for (int t = T - 1; t >= 0; --t) {
    ++durations[s];
    if (t == 0) break;
    if (s != 0 && (s == t || Q(s - 1, t - 1) > Q(s, t - 1))) --s;
  }
  AlignmentResult r;
  r.path = durations_to_path(durations);
  r.total_log_likelihood = Q(S - 1, T - 1);
  r.durations = std::move(durations);
  return r;
}

AlignmentResult brute_force_align(const Matrix& lattice) {
  check_lattice(lattice);
  const int S = lattice.rows, T = lattice.cols;
  if (T > 14 || S > 8) throw std::invalid_argument("brute_force_align: instance too large (T <= 14, S <= 8)");
  std::vector<int> cur(S), best;
  double best_score = 0.0;
  // Later tokens holding on to later frames longer reads as a larger path
  // when compared backwards from the last frame.
  auto reversed_greater = [](const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(b.rbegin(), b.rend(), a.rbegin(), a.rend());
  };
  auto visit = [&](auto&& self, int s, int remaining) -> void {
    if (s == S - 1) {
      cur[s] = remaining;
      const double score = path_score(lattice, cur);
      if (best.empty() || score > best_score ||
          (score == best_score && reversed_greater(durations_to_path(cur), durations_to_path(best)))) {
        best = cur;
        best_score = score;
      }
      return;
    }
    for (int d = 1; d <= remaining - (S - 1 - s); ++d) {
      cur[s] = d;
      self(self, s + 1, remaining - d);
    }
  };
  visit(visit, 0, T);
  return finish(lattice, best);
}

// Kernel selection ----------------------------------------------------------

namespace {

struct KernelState {
  std::mutex mu;
  KernelInfo info{"reference", false, ""};
  std::atomic<uniflg_mas_align_fn> fn{nullptr};
  std::once_flag probed;
};

KernelState& state() {
  static KernelState s;
  return s;
}

KernelInfo load_locked(KernelState& st, const std::string& spec) {
  st.fn.store(nullptr);
  st.info = KernelInfo{"reference", false, ""};
  if (spec == "reference") return st.info;
  const bool explicit_path = !spec.empty();
  const std::string lib = explicit_path ? spec : kDefaultKernelLibrary;
  void* handle = dlopen(lib.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (!handle) {
    const char* err = dlerror();
    st.info.diagnostic = "cannot load " + lib + ": " + (err ? err : "unknown error");
    return st.info;
  }
  auto version = reinterpret_cast<uniflg_mas_abi_version_fn>(dlsym(handle, "uniflg_mas_kernel_abi_version"));
  auto fn = reinterpret_cast<uniflg_mas_align_fn>(dlsym(handle, "uniflg_mas_align_fast"));
  if (!version || !fn) {
    st.info.diagnostic = lib + " does not export the alignment kernel symbols";
    dlclose(handle);
    return st.info;
  }
  if (version() != UNIFLG_MAS_KERNEL_ABI_VERSION) {
    st.info.diagnostic = lib + " has ABI version " + std::to_string(version()) + ", expected " +
                         std::to_string(UNIFLG_MAS_KERNEL_ABI_VERSION);
    dlclose(handle);
    return st.info;
  }
  // Handles stay open for the life of the process; callers may still hold fn.
  st.fn.store(fn);
  st.info = KernelInfo{lib, true, ""};
  return st.info;
}

void probe_once() {
  KernelState& st = state();
  std::call_once(st.probed, [&] {
    const char* env = std::getenv(kKernelEnvVar);
    std::lock_guard lock(st.mu);
    const KernelInfo info = load_locked(st, env ? env : "");
    if (env && !info.accelerated && !info.diagnostic.empty())
      std::fprintf(stderr, "uniflg: %s; using the reference alignment\n", info.diagnostic.c_str());
  });
}

}  // namespace

KernelInfo select_kernel(const std::string& spec) {
  probe_once();
  KernelState& st = state();
  std::lock_guard lock(st.mu);
  return load_locked(st, spec);
}

KernelInfo active_kernel() {
  probe_once();
  KernelState& st = state();
  std::lock_guard lock(st.mu);
  return st.info;
}

AlignmentResult align(const Matrix& lattice) {
  probe_once();
  const uniflg_mas_align_fn fn = state().fn.load();
  if (!fn) return mas_align(lattice);
  check_lattice(lattice);
  const int S = lattice.rows, T = lattice.cols;
  std::vector<float> buf(lattice.data.begin(), lattice.data.end());
  std::vector<int32_t> d(S, 0);
  if (fn(buf.data(), S, T, d.data()) == 0) {
    long total = 0;
    bool ok = true;
    for (int32_t v : d) {
      ok = ok && v >= 1;
      total += v;
    }
    if (ok && total == T) return finish(lattice, std::vector<int>(d.begin(), d.end()));
  }
  return mas_align(lattice);
}

// Conformance corpus --------------------------------------------------------

void write_lattice(const std::filesystem::path& path, const Matrix& lattice) {
  io::write_tensor(path, io::matrix_tensor(lattice));
}

Matrix read_lattice(const std::filesystem::path& path) {
  const io::TensorFile t = io::read_tensor(path);
  if (t.rank != 2) throw std::runtime_error(path.string() + ": lattice must be rank 2");
  return io::tensor_matrix(t);
}

void write_conformance_corpus(const std::filesystem::path& dir, int count, std::uint64_t seed,
                              int max_tokens, int max_frames) {
  if (count < 1 || max_tokens < 1 || max_frames < max_tokens)
    throw std::invalid_argument("conformance corpus: need count >= 1 and max_frames >= max_tokens >= 1");
  std::filesystem::create_directories(dir);
  std::ofstream expected(dir / "expected.jsonl", std::ios::trunc);
  if (!expected) throw std::runtime_error("cannot write " + (dir / "expected.jsonl").string());
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, {static_cast<std::uint64_t>(i)});
    const int S = rng.uniform_int(1, max_tokens);
    const int T = rng.uniform_int(S, max_frames);
    Matrix lattice(S, T);
    // Some instances use a coarse integer grid so exact ties are exercised.
    const bool ties = i % 4 == 3;
    for (double& v : lattice.data)
      v = ties ? static_cast<double>(-rng.uniform_int(0, 3))
               : static_cast<double>(static_cast<float>(-0.5 * rng.normal() * rng.normal() * 8.0 - 4.0));
    char name[32];
    std::snprintf(name, sizeof(name), "lattice_%04d.f32", i);
    write_lattice(dir / name, lattice);
    const AlignmentResult r = mas_align(read_lattice(dir / name));
    nlohmann::json j;
    j["file"] = name;
    j["S"] = S;
    j["T"] = T;
    j["durations"] = r.durations;
    j["score"] = r.total_log_likelihood;
    expected << j.dump() << '\n';
  }
}

}  // namespace uniflg::mas

extern "C" int32_t uniflg_mas_align_reference(const float* lattice, int32_t S, int32_t T,
                                              int32_t* out_durations) {
  if (!lattice || !out_durations || S < 1 || T < S) return 1;
  try {
    uniflg::Matrix m(S, T);
    std::copy(lattice, lattice + static_cast<std::size_t>(S) * T, m.data.begin());
    const auto r = uniflg::mas::mas_align(m);
    std::copy(r.durations.begin(), r.durations.end(), out_durations);
    return 0;
  } catch (...) {
    return 2;
  }
}
