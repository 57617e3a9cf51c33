// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "protoscene/geometry/point_cloud.hpp"
#include "protoscene/model/network.hpp"
#include "protoscene/nn/backend.hpp"
#include "protoscene/training/patches.hpp"

namespace protoscene::eval {

struct PatchDecomposition {
  train::PatchFrame frame;
  std::vector<std::size_t> source;          // scene index of each patch point
  std::vector<model::SlotParams> params;    // all S slots
  std::vector<model::ActiveSlot> active;
  std::vector<geom::PointCloud> clouds;     // per active slot, patch frame, with intensity
  std::vector<int> point_active;            // per patch point: index into `active`, -1 when empty
  std::vector<int> point_proto_point;       // nearest point index within that cloud
  bool use_intensity = false;

  bool empty() const { return active.empty(); }
};

/// Inferred decomposition of a whole scene on the inference grid.
struct Decomposition {
  std::size_t scene_size = 0;
  double patch_size_m = 0.0;
  int prototypes = 0;
  int points_per_prototype = 0;
  std::vector<PatchDecomposition> patches;
};

struct DecomposeOptions {
  double patch_size_m = 0.0;
  bool use_intensity = true;
  const std::vector<bool>* live = nullptr;  // prototype mask
};

/// Runs inference on every grid patch and assigns every input point to its
/// nearest reconstruction point (loss space of the patch).
Decomposition decompose(const model::Network& net, const model::CurriculumStage& stage,
                        const geom::PointCloud& scene, const DecomposeOptions& opts,
                        const nn::Backend& backend = nn::default_backend());

/// Union of the active reconstructions of one patch (patch frame); `owner`
/// receives (active index, point index) for each point.
geom::PointCloud patch_reconstruction(const PatchDecomposition& p,
                                      std::vector<std::pair<int, int>>* owner = nullptr);

/// Whole-scene reconstruction in the scene frame, with per-point prototype
/// ids in `class_label` and (patch, slot) ids in `instance_label`.
geom::PointCloud scene_reconstruction(const Decomposition& d);

}  // namespace protoscene::eval
