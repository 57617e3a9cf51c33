// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops. Every kernel has a scalar reference
// implementation and, where the build and the CPU allow it, an AVX2 variant.
// The variant is picked once at runtime; tests call both directly.

#pragma once

#include <cstddef>
#include <cstdint>

namespace protoscene::simd {

/// Exact nearest neighbour of each query among the reference points.
///
/// Queries are row-major (`n_queries x dim`). References are stored
/// structure-of-arrays: coordinate `d` of point `i` is `ref[d * ref_stride + i]`.
/// Writes the squared distance and the reference index of the nearest point;
/// ties go to the lowest index. Requires `n_ref > 0` and `1 <= dim <= 4`.
///
/// Distances are accumulated as `((dx*dx + dy*dy) + dz*dz) + dw*dw` without
/// FMA in every variant, so all variants agree bit for bit.
using NearestFn = void (*)(const double* queries, std::size_t n_queries, int dim,
                           const double* ref, std::size_t n_ref, std::size_t ref_stride,
                           double* dist, std::uint32_t* index);

using DotFn = double (*)(const double* a, const double* b, std::size_t n);

/// y += a * x
using AxpyFn = void (*)(double a, const double* x, double* y, std::size_t n);

struct KernelTable {
  const char* name;
  NearestFn nearest;
  DotFn dot;
  AxpyFn axpy;
};

const KernelTable& scalar_kernels();

/// nullptr when the build has no AVX2 path or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Best table for this machine. Setting PROTOSCENE_SIMD=scalar forces the
/// reference kernels.
const KernelTable& kernels();

}  // namespace protoscene::simd
