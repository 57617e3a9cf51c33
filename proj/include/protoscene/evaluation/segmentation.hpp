// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <vector>

#include "protoscene/evaluation/decompose.hpp"

namespace protoscene::eval {

/// Class of every prototype point (-1 when it never received a vote).
struct PrototypeLabels {
  int prototypes = 0;
  int points_per_prototype = 0;
  std::vector<int> labels;                     // k * P + p
  std::vector<std::vector<std::size_t>> votes; // k * P + p -> count per class id
  /// Mean normalised entropy of the vote distributions of voted points.
  double mean_normalized_entropy = 0.0;

  int label(int k, int p) const { return labels[static_cast<std::size_t>(k) * points_per_prototype + p]; }
};

/// Every active slot's transformed prototype points vote the class of their
/// nearest labelled input point; the per-point majority wins (lowest class
/// id on ties). Throws DomainError when the scene has no labelled point.
PrototypeLabels label_prototypes(const Decomposition& d, const geom::PointCloud& scene,
                                 const nn::Backend& backend = nn::default_backend());

/// Class of the nearest reconstruction point; -1 in empty patches.
std::vector<int> semantic_segmentation(const Decomposition& d, const PrototypeLabels& labels);

/// Points assigned to an active slot whose prototype is in `targets` get the
/// id of that (patch, slot); ids are consecutive from 0 in patch order.
std::vector<int> instance_segmentation(const Decomposition& d, const std::set<int>& targets);

/// Number of slot instances in the given patches whose prototype is in `targets`.
std::size_t count_instances(const Decomposition& d, const std::set<int>& targets);

}  // namespace protoscene::eval
