// SPDX-License-Identifier: Apache-2.0
//
// Slot parameters and the maps from raw head outputs to them.

#pragma once

#include <vector>

#include "protoscene/geometry/transform.hpp"
#include "protoscene/model/config.hpp"

namespace protoscene::model {

/// Activation probability, joint choice probabilities (sum to alpha) and
/// placement of one slot.
struct SlotParams {
  double alpha = 0.0;
  std::vector<double> beta;
  geom::AffineTransform transform;
};

/// Unconstrained outputs of the five heads for one slot.
struct SlotRaw {
  std::vector<double> logits;       // K+1; entry 0 is the "inactive" logit
  std::vector<double> scale;        // 3 (constrained) or 9 (full affine, row-major)
  double tilt = 0.0;
  double rot[2] = {0.0, 0.0};
  double translate[3] = {0.0, 0.0, 0.0};

  static SlotRaw zeros(const ModelConfig& cfg);
};

/// Gradient of a scalar objective with respect to one slot's parameters.
struct SlotParamsGrad {
  double alpha = 0.0;
  std::vector<double> beta;
  geom::Vec3 scale = geom::Vec3::Zero();
  Eigen::Matrix3d linear = Eigen::Matrix3d::Zero();
  double tilt = 0.0;
  double rot_z = 0.0;
  geom::Vec3 translation = geom::Vec3::Zero();

  explicit SlotParamsGrad(int prototypes = 0) : beta(prototypes, 0.0) {}
};

/// Softmax over the live entries of `logits`; `live[k]` (k = 0..K-1) disables
/// the logit of prototype k when false. The inactive entry is always live.
std::vector<double> masked_softmax(const std::vector<double>& logits, const std::vector<bool>* live);

/// rot_z from the 2-D rotation head output (atan2 of the vector).
double rotation_from_vector(double v0, double v1);

/// Maps raw outputs to slot parameters under the curriculum gating of
/// `stage`. The rotation head output is offset by (1, 0) so that zero output
/// means no rotation.
SlotParams decode_slot(const SlotRaw& raw, const ModelConfig& cfg, const CurriculumStage& stage,
                       const std::vector<bool>* live = nullptr);

/// Chain rule through decode_slot.
SlotRaw decode_slot_backward(const SlotRaw& raw, const SlotParams& params, const SlotParamsGrad& grad,
                             const ModelConfig& cfg, const CurriculumStage& stage);

}  // namespace protoscene::model
