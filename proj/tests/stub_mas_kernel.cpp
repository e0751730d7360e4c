// Minimal alignment kernel used to exercise the shared-library loader. It is
// written independently of the in-process reference (rolling two columns).
#include <cstdint>
#include <vector>

#ifndef STUB_ABI_VERSION
#define STUB_ABI_VERSION 1
#endif

extern "C" int32_t uniflg_mas_kernel_abi_version(void) { return STUB_ABI_VERSION; }

extern "C" int32_t uniflg_mas_align_fast(const float* lattice, int32_t S, int32_t T, int32_t* out) {
  if (!lattice || !out || S < 1 || T < S) return 1;
  const double neg = -1e30;
  // choose[t * S + s] = 1 when frame t entered token s from token s - 1.
  std::vector<unsigned char> moved(static_cast<size_t>(S) * T, 0);
  std::vector<double> prev(S, neg), cur(S, neg);
  prev[0] = lattice[0];
  for (int32_t t = 1; t < T; ++t) {
    for (int32_t s = 0; s < S; ++s) {
      if (s > t) {
        cur[s] = neg;
        continue;
      }
      const double stay = s <= t - 1 ? prev[s] : neg;
      const double diag = s > 0 ? prev[s - 1] : neg;
      const bool take_diag = s > 0 && (s == t || diag > stay);
      moved[static_cast<size_t>(t) * S + s] = take_diag;
      cur[s] = (take_diag ? diag : stay) + lattice[static_cast<size_t>(s) * T + t];
    }
    prev.swap(cur);
  }
  for (int32_t s = 0; s < S; ++s) out[s] = 0;
  int32_t s = S - 1;
  for (int32_t t = T - 1; t >= 0; --t) {
    ++out[s];
    if (t > 0 && moved[static_cast<size_t>(t) * S + s]) --s;
  }
  return 0;
}
