#ifndef UNIFLG_MAS_KERNEL_ABI_H
#define UNIFLG_MAS_KERNEL_ABI_H

/* C boundary for monotonic alignment kernels.
 *
 * A kernel shared library exports both symbols below. The lattice is a
 * contiguous row-major S x T float32 buffer of per-(token, frame) log
 * likelihoods. On success the kernel writes S positive durations summing to T
 * into out_durations and returns 0. Ties are broken exactly like the
 * reference: during backtracking stay on the current token unless the
 * diagonal predecessor is strictly better. Scores are accumulated in double.
 *
 * Return codes: 0 ok, 1 bad arguments (null pointer, S < 1, T < S),
 * 2 internal failure. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define UNIFLG_MAS_KERNEL_ABI_VERSION 1

typedef int32_t (*uniflg_mas_abi_version_fn)(void);
typedef int32_t (*uniflg_mas_align_fn)(const float* lattice, int32_t S, int32_t T,
                                       int32_t* out_durations);

int32_t uniflg_mas_kernel_abi_version(void);
int32_t uniflg_mas_align_fast(const float* lattice, int32_t S, int32_t T, int32_t* out_durations);

/* In-process reference with the same contract, always available. */
int32_t uniflg_mas_align_reference(const float* lattice, int32_t S, int32_t T,
                                   int32_t* out_durations);

#ifdef __cplusplus
}
#endif

#endif
