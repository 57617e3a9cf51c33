// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "protoscene/evaluation/metrics.hpp"
#include "protoscene/geometry/point_cloud.hpp"

namespace protoscene::eval {

inline constexpr int kKMeansMaxIterations = 50;

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<double> centroids;  // k x dim
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding on row-major `features`
/// (n x dim). Throws ParameterError when k < 1 or k > n.
KMeansResult kmeans(const std::vector<double>& features, int dim, int k, std::uint64_t seed,
                    int max_iterations = kKMeansMaxIterations);

struct KMeansFeatures {
  bool intensity = true;
  bool elevation = true;
};

struct KMeansBaseline {
  std::vector<int> prediction;
  std::vector<int> cluster_class;
  IouReport iou;
};

/// Clusters standardised (intensity, elevation) features and gives each
/// cluster its most frequent ground-truth class (lowest id on ties).
/// Throws DomainError when a requested feature or the class labels are absent.
KMeansBaseline kmeans_baseline(const geom::PointCloud& scene, int k, KMeansFeatures features, std::uint64_t seed);

}  // namespace protoscene::eval
