// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit tests.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"

namespace testutil {

using protoscene::geom::FeatureCloud;
using protoscene::geom::PointCloud;
using protoscene::geom::Vec3;

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0,
                               bool intensity = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::uniform_real_distribution<double> i01(0.0, 1.0);
  PointCloud p;
  for (std::size_t i = 0; i < n; ++i) p.positions.emplace_back(u(rng), u(rng), u(rng));
  if (intensity) {
    p.intensity = std::vector<double>{};
    for (std::size_t i = 0; i < n; ++i) p.intensity->push_back(i01(rng));
  }
  return p;
}

inline FeatureCloud random_features(std::mt19937_64& rng, std::size_t n, int dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureCloud f;
  f.dim = dim;
  for (std::size_t i = 0; i < n * static_cast<std::size_t>(dim); ++i) f.coords.push_back(u(rng));
  return f;
}

/// Mean over x of the squared distance to the nearest y, by a plain double loop.
inline double chamfer_loop(const FeatureCloud& x, const FeatureCloud& y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double best = INFINITY;
    for (std::size_t j = 0; j < y.size(); ++j) {
      double d = 0.0;
      for (int c = 0; c < x.dim; ++c) {
        const double diff = x.point(i)[c] - y.point(j)[c];
        d += diff * diff;
      }
      best = std::min(best, d);
    }
    sum += best;
  }
  return sum / static_cast<double>(x.size());
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace testutil
