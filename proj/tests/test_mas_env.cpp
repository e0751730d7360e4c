// Checks the startup probe of UNIFLG_MAS_KERNEL. argv[1] names the expected
// outcome: "accelerated" or "reference".
#include <cstdio>
#include <string>

#include "uniflg/mas.hpp"
#include "uniflg/rng.hpp"

int main(int argc, char** argv) {
  if (argc != 2) return 2;
  const std::string want = argv[1];
  const uniflg::mas::KernelInfo info = uniflg::mas::active_kernel();
  std::printf("kernel: %s accelerated=%d %s\n", info.name.c_str(), info.accelerated, info.diagnostic.c_str());
  if (info.accelerated != (want == "accelerated")) return 1;
  uniflg::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int S = rng.uniform_int(1, 10), T = rng.uniform_int(S, 40);
    uniflg::Matrix L(S, T);
    for (double& v : L.data) v = static_cast<float>(rng.uniform(-5.0, 0.0));
    if (uniflg::mas::align(L).durations != uniflg::mas::mas_align(L).durations) return 1;
  }
  return 0;
}
