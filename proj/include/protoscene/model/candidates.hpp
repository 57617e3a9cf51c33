// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "protoscene/geometry/point_cloud.hpp"
#include "protoscene/model/heads.hpp"
#include "protoscene/model/prototypes.hpp"

namespace protoscene::model {

/// All S x K candidate reconstructions of one patch, in the patch frame.
/// Candidate (s,k) is prototype k (with its scales applied) placed by slot s,
/// carrying the prototype's intensity on every point.
struct CandidateSet {
  int slots = 0;
  int prototypes = 0;
  int points_per_prototype = 0;
  std::vector<SlotParams> params;   // S
  std::vector<geom::Vec3> points;   // ((s * K) + k) * P + p
  std::vector<double> intensity;    // K

  std::size_t offset(int s, int k) const {
    return (static_cast<std::size_t>(s) * prototypes + k) * points_per_prototype;
  }
  const geom::Vec3* cloud(int s, int k) const { return points.data() + offset(s, k); }

  /// Candidate (s,k) as a point cloud with its intensity channel.
  geom::PointCloud candidate(int s, int k) const;
};

/// Gradient of a scalar objective with respect to a candidate set.
struct CandidateGrad {
  std::vector<SlotParamsGrad> slots;
  std::vector<geom::Vec3> points;
  std::vector<double> intensity;

  explicit CandidateGrad(const CandidateSet& c);
  CandidateGrad() = default;
};

CandidateSet build_candidates(const std::vector<SlotParams>& params, const PrototypeBank& bank);

/// Pushes point and intensity gradients back to the slot transforms (added
/// into `grad.slots`) and to the prototype bank (added into `bank_grad`).
void candidates_backward(const CandidateSet& cand, const PrototypeBank& bank, CandidateGrad& grad,
                         PrototypeBankGrad& bank_grad);

}  // namespace protoscene::model
