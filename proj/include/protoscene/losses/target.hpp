// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "protoscene/geometry/loss_space.hpp"
#include "protoscene/model/candidates.hpp"

namespace protoscene::loss {

/// An input patch X prepared for the reconstruction losses: its loss-space
/// map and its image under that map.
struct PatchTarget {
  geom::LossSpace space;
  geom::FeatureCloud x;

  /// Fits the loss space on `patch` (4-D only when `use_intensity` and the
  /// patch carries intensity). Throws DomainError on an empty patch.
  static PatchTarget from_patch(const geom::PointCloud& patch, bool use_intensity);
};

/// Loss-space coordinates of candidate (s,k). With `clip`, only points inside
/// the horizontal patch extent are kept and `kept` lists their indices.
geom::FeatureCloud map_candidate(const model::CandidateSet& cand, int s, int k,
                                 const geom::LossSpace& space, bool clip,
                                 std::vector<std::uint32_t>* kept = nullptr);

/// Adds the gradient with respect to a loss-space point of candidate (s,k)
/// into the patch-frame candidate gradient.
void add_point_grad(const geom::LossSpace& space, int k, std::size_t point_offset, const double* g,
                    model::CandidateGrad& grad);

}  // namespace protoscene::loss
