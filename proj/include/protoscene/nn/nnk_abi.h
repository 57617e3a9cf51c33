/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C ABI of an external exact nearest-neighbour kernel library. The library is
 * loaded at runtime (EP_NN_KERNEL=shared-lib:<path>); nothing links against it.
 *
 * Clouds are row-major little-endian float32, `count * dim` values, dim 3 or 4.
 * Distances are squared Euclidean; ties resolve to the lowest reference index.
 * Every function returning int uses the status codes below.
 */
#ifndef PROTOSCENE_NNK_ABI_H
#define PROTOSCENE_NNK_ABI_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  NNK_OK = 0,
  NNK_EMPTY_REFERENCE = 1,
  NNK_DIM_MISMATCH = 2
};

/* Builds an immutable search structure over `count` reference points. */
typedef int (*nnk_build_tree_fn)(const float* coords, uint32_t count, uint8_t dim, void** out_tree);

/* Nearest reference point for each query. Safe to call concurrently. */
typedef int (*nnk_query_fn)(const void* tree, const float* queries, uint32_t count, uint8_t dim,
                            float* out_dist, uint32_t* out_index);

typedef void (*nnk_free_fn)(void* tree);

/* Asymmetric Chamfer (mean over each query cloud of the squared distance to
 * its reference cloud), one value and one status per pair. */
typedef int (*nnk_batched_chamfer_fn)(uint32_t n_pairs, const float* const* queries,
                                      const uint32_t* query_counts,
                                      const float* const* references,
                                      const uint32_t* reference_counts, uint8_t dim,
                                      double* out_values, int32_t* out_status);

#ifdef __cplusplus
}
#endif

#endif /* PROTOSCENE_NNK_ABI_H */
