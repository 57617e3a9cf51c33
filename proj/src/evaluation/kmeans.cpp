// SPDX-License-Identifier: Apache-2.0

#include "protoscene/evaluation/kmeans.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "protoscene/errors.hpp"

namespace protoscene::eval {

namespace {

double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const std::vector<double>& f, int dim, int k, std::uint64_t seed, int max_iterations) {
  const std::size_t n = dim > 0 ? f.size() / static_cast<std::size_t>(dim) : 0;
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw ParameterError("kmeans: k must lie in [1, number of points]");
  }
  std::mt19937_64 rng(seed);
  KMeansResult r;
  r.centroids.reserve(static_cast<std::size_t>(k) * dim);

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::vector<bool> chosen(n, false);
  auto add_center = [&](std::size_t i) {
    chosen[i] = true;
    r.centroids.insert(r.centroids.end(), f.begin() + static_cast<std::ptrdiff_t>(i * dim),
                       f.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    const double* c = f.data() + i * dim;
    for (std::size_t j = 0; j < n; ++j) d2[j] = std::min(d2[j], sq_dist(f.data() + j * dim, c, dim));
  };
  add_center(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += d2[j];
    std::size_t pick = n;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t j = 0; j < n; ++j) {
        u -= d2[j];
        if (u < 0.0 && !chosen[j]) {
          pick = j;
          break;
        }
      }
    }
    if (pick == n) {
      // All remaining mass is on duplicates: take the first unused point.
      for (std::size_t j = 0; j < n && pick == n; ++j) {
        if (!chosen[j]) pick = j;
      }
    }
    add_center(pick);
  }

  r.assignment.assign(n, 0);
  std::vector<double> sums(static_cast<std::size_t>(k) * dim);
  std::vector<std::size_t> counts(k);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t j = 0; j < n; ++j) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(f.data() + j * dim, r.centroids.data() + static_cast<std::size_t>(c) * dim, dim);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (it == 0 || r.assignment[j] != best) changed = true;
      r.assignment[j] = best;
    }
    r.iterations = it + 1;
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t j = 0; j < n; ++j) {
      const int c = r.assignment[j];
      ++counts[c];
      for (int d = 0; d < dim; ++d) sums[static_cast<std::size_t>(c) * dim + d] += f[j * dim + d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (int d = 0; d < dim; ++d) {
        r.centroids[static_cast<std::size_t>(c) * dim + d] = sums[static_cast<std::size_t>(c) * dim + d] / counts[c];
      }
    }
  }
  return r;
}

KMeansBaseline kmeans_baseline(const geom::PointCloud& scene, int k, KMeansFeatures feats, std::uint64_t seed) {
  if (!scene.class_label) throw DomainError("kmeans baseline: scene has no class labels");
  if (feats.intensity && !scene.intensity) throw DomainError("kmeans baseline: scene has no intensity");
  if (!feats.intensity && !feats.elevation) throw ParameterError("kmeans baseline: no feature selected");
  const std::size_t n = scene.size();
  const int dim = (feats.intensity ? 1 : 0) + (feats.elevation ? 1 : 0);
  std::vector<double> f(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    int d = 0;
    if (feats.intensity) f[i * dim + d++] = (*scene.intensity)[i];
    if (feats.elevation) f[i * dim + d++] = scene.positions[i].z();
  }
  for (int d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += f[i * dim + d];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (f[i * dim + d] - mean) * (f[i * dim + d] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) f[i * dim + d] = sd > 0.0 ? (f[i * dim + d] - mean) / sd : 0.0;
  }
  const KMeansResult km = kmeans(f, dim, k, seed);

  KMeansBaseline out;
  std::vector<std::map<int, std::size_t>> votes(k);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = (*scene.class_label)[i];
    if (c >= 0) ++votes[km.assignment[i]][c];
  }
  out.cluster_class.assign(k, -1);
  for (int c = 0; c < k; ++c) {
    std::size_t best = 0;
    for (const auto& [cls, cnt] : votes[c]) {
      if (cnt > best) {
        best = cnt;
        out.cluster_class[c] = cls;
      }
    }
  }
  out.prediction.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.prediction[i] = out.cluster_class[km.assignment[i]];
  out.iou = miou(out.prediction, *scene.class_label);
  return out;
}

}  // namespace protoscene::eval
