#pragma once

// Monotonic alignment search between frame-level flow latents and per-token
// Gaussian prior statistics.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uniflg/types.hpp"

namespace uniflg::mas {

/// Stand-in for -inf in the DP table; any real path scores far above it.
inline constexpr double kNegInf = -1e30;

struct AlignmentResult {
  std::vector<int> durations;  // per token, positive, sum = T
  std::vector<int> path;       // frame -> token, non-decreasing
  double total_log_likelihood = 0.0;
};

/// S x T matrix with entry (s, t) = log N(fz_t; mu_s, diag sigma_s^2),
/// summed over latent dims. Throws when T < S or dims disagree.
Matrix loglik_lattice(const Matrix& fz, const PriorStats& prior);

/// Viterbi over monotone surjective alignments:
///   Q[s][t] = max(Q[s][t-1], Q[s-1][t-1]) + L[s][t].
/// Backtracking stays on the current token unless the diagonal predecessor
/// is strictly better.
AlignmentResult mas_align(const Matrix& lattice);

/// Exhaustive oracle for small lattices (T <= 14, S <= 8). Among exactly tied
/// maxima it returns the path that mas_align's backtrack produces.
AlignmentResult brute_force_align(const Matrix& lattice);

/// Sum of lattice entries along the path implied by `durations`, accumulated
/// frame by frame.
double path_score(const Matrix& lattice, const std::vector<int>& durations);
std::vector<int> durations_to_path(const std::vector<int>& durations);

// Accelerated kernels -------------------------------------------------------

/// Environment variable selecting the alignment kernel: "reference", or a
/// path to a shared library exporting the C boundary in mas_kernel_abi.h.
/// Unset probes kDefaultKernelLibrary on the loader search path.
inline constexpr const char* kKernelEnvVar = "UNIFLG_MAS_KERNEL";
inline constexpr const char* kDefaultKernelLibrary = "libuniflg_mas_kernel.so";

struct KernelInfo {
  std::string name;        // "reference" or the library path
  bool accelerated = false;
  std::string diagnostic;  // why a requested library was not used
};

/// Loads the kernel named by `spec` (same syntax as the environment
/// variable; empty = default probe) and makes it active. Falls back to the
/// reference when the library is missing or has the wrong ABI version.
KernelInfo select_kernel(const std::string& spec);
/// Active kernel; the first call probes the environment variable.
KernelInfo active_kernel();

/// mas_align through the active kernel. The lattice is rounded to float32
/// for the C boundary; the score is recomputed in double on the original
/// lattice. Kernel failures fall back to the reference.
AlignmentResult align(const Matrix& lattice);

// Conformance corpus --------------------------------------------------------

void write_lattice(const std::filesystem::path& path, const Matrix& lattice);
Matrix read_lattice(const std::filesystem::path& path);

/// Writes `count` random float32 lattices (S in [1, max_tokens], T in
/// [S, max_frames]) as lattice_NNNN.f32 plus expected.jsonl holding the
/// reference durations and score of each.
void write_conformance_corpus(const std::filesystem::path& dir, int count, std::uint64_t seed,
                              int max_tokens, int max_frames);

}  // namespace uniflg::mas
