// SPDX-License-Identifier: Apache-2.0

#include "protoscene/simd/kernels.hpp"

#include <limits>

namespace protoscene::simd {
namespace {

void nearest_scalar(const double* queries, std::size_t n_queries, int dim, const double* ref,
                    std::size_t n_ref, std::size_t ref_stride, double* dist,
                    std::uint32_t* index) {
  for (std::size_t q = 0; q < n_queries; ++q) {
    const double* p = queries + q * static_cast<std::size_t>(dim);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_i = 0;
    for (std::size_t i = 0; i < n_ref; ++i) {
      double acc = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double diff = p[d] - ref[static_cast<std::size_t>(d) * ref_stride + i];
        acc = acc + diff * diff;
      }
      if (acc < best) {
        best = acc;
        best_i = static_cast<std::uint32_t>(i);
      }
    }
    dist[q] = best;
    index[q] = best_i;
  }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", &nearest_scalar, &dot_scalar, &axpy_scalar};
  return table;
}

}  // namespace protoscene::simd
