// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "protoscene/geometry/point_cloud.hpp"
#include "protoscene/losses/coverage.hpp"
#include "protoscene/model/network.hpp"
#include "protoscene/nn/backend.hpp"

namespace protoscene::eval {

struct SelectionStep {
  int removed = -1;
  double increase = 0.0;     // relative
  double loss_before = 0.0;
  double loss_after = 0.0;
};

struct SelectionReport {
  std::vector<int> kept;
  std::vector<SelectionStep> steps;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct SelectionOptions {
  double patch_size_m = 0.0;
  bool use_intensity = true;
  double threshold = 0.05;
  bool relative_to_current = true;
  loss::CoverageMode coverage = loss::CoverageMode::kExact;
};

/// Mean reconstruction loss (acc + cov) over the inference grid with the
/// prototypes where `live` is false masked out of the softmax.
class MaskedLossEvaluator {
 public:
  MaskedLossEvaluator(const model::Network& net, const model::CurriculumStage& stage,
                      const geom::PointCloud& scene, const SelectionOptions& opts,
                      const nn::Backend& backend = nn::default_backend());
  double operator()(const std::vector<bool>& live) const;

 private:
  const model::Network* net_;
  model::CurriculumStage stage_;
  loss::CoverageMode coverage_;
  const nn::Backend* backend_;
  model::PrototypeBank bank_;
  std::vector<std::vector<model::SlotRaw>> raw_;
  std::vector<loss::PatchTarget> targets_;
};

/// Greedy pruning: repeatedly mask each live prototype, remove the one with
/// the smallest relative loss increase if that increase is below the
/// threshold; stop otherwise or when one prototype is left.
SelectionReport select_prototypes(const model::Network& net, const model::CurriculumStage& stage,
                                  const geom::PointCloud& scene, const SelectionOptions& opts,
                                  const nn::Backend& backend = nn::default_backend());

}  // namespace protoscene::eval
