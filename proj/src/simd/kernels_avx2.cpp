// SPDX-License-Identifier: Apache-2.0

#include "protoscene/simd/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>

#include <limits>

namespace protoscene::simd {
namespace detail {

namespace {

inline double dist_tail(const double* p, int dim, const double* ref, std::size_t stride,
                        std::size_t i) {
  double acc = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double diff = p[d] - ref[static_cast<std::size_t>(d) * stride + i];
    acc = acc + diff * diff;
  }
  return acc;
}

void nearest_avx2(const double* queries, std::size_t n_queries, int dim, const double* ref,
                  std::size_t n_ref, std::size_t ref_stride, double* dist,
                  std::uint32_t* index) {
  const std::size_t vec_end = n_ref & ~static_cast<std::size_t>(3);
  const __m256d lane_offsets = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d four = _mm256_set1_pd(4.0);

  for (std::size_t q = 0; q < n_queries; ++q) {
    const double* p = queries + q * static_cast<std::size_t>(dim);
    __m256d qv[4];
    for (int d = 0; d < dim; ++d) qv[d] = _mm256_set1_pd(p[d]);

    __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    // Indices travel as doubles: exact for any count below 2^53.
    __m256d best_idx = _mm256_setzero_pd();
    __m256d idx = lane_offsets;

    for (std::size_t i = 0; i < vec_end; i += 4) {
      __m256d diff = _mm256_sub_pd(qv[0], _mm256_loadu_pd(ref + i));
      __m256d acc = _mm256_mul_pd(diff, diff);
      for (int d = 1; d < dim; ++d) {
        diff = _mm256_sub_pd(qv[d], _mm256_loadu_pd(ref + static_cast<std::size_t>(d) * ref_stride + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
      }
      const __m256d lt = _mm256_cmp_pd(acc, best, _CMP_LT_OQ);
      best = _mm256_blendv_pd(best, acc, lt);
      best_idx = _mm256_blendv_pd(best_idx, idx, lt);
      idx = _mm256_add_pd(idx, four);
    }

    alignas(32) double lane_best[4];
    alignas(32) double lane_idx[4];
    _mm256_store_pd(lane_best, best);
    _mm256_store_pd(lane_idx, best_idx);

    double b = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    for (int l = 0; l < 4; ++l) {
      const auto li = static_cast<std::size_t>(lane_idx[l]);
      if (lane_best[l] < b || (lane_best[l] == b && li < bi)) {
        b = lane_best[l];
        bi = li;
      }
    }
    for (std::size_t i = vec_end; i < n_ref; ++i) {
      const double acc = dist_tail(p, dim, ref, ref_stride, i);
      if (acc < b) {
        b = acc;
        bi = i;
      }
    }
    dist[q] = b;
    index[q] = static_cast<std::uint32_t>(bi);
  }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc0);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(av, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", &nearest_avx2, &dot_avx2, &axpy_avx2};
  return &table;
}

}  // namespace detail
}  // namespace protoscene::simd

#else

namespace protoscene::simd::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace protoscene::simd::detail

#endif
