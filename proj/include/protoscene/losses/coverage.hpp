// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <vector>

#include "protoscene/losses/target.hpp"
#include "protoscene/nn/backend.hpp"

namespace protoscene::loss {

/// kExact: expected distance from each input point to the nearest realised
/// candidate, over independent slot draws (inactive, or prototype k with
/// probability beta_s^k); the all-inactive event costs 0.
///
/// kSlotSorted: slots sorted by their conditional expected distance
/// A(x,s)/alpha_s and accumulated as sum_s A(x,s) prod_{r<s} (1 - alpha_r).
/// Equal to kExact for K = 1 and an upper bound of it otherwise.
enum class CoverageMode { kExact, kSlotSorted };

std::string_view coverage_mode_name(CoverageMode m);
/// Throws ParameterError on an unknown name.
CoverageMode parse_coverage_mode(std::string_view name);

/// Per input point, squared loss-space distance to every candidate:
/// `dist[(s*K + k) * N + i]`, plus the index of the nearest candidate point.
struct CandidateDistances {
  std::size_t n = 0;
  std::vector<double> dist;
  std::vector<std::uint32_t> index;
};

CandidateDistances candidate_distances(const model::CandidateSet& cand, const PatchTarget& target,
                                       const nn::Backend& backend = nn::default_backend());

/// Mean over X of the expected coverage distance. Adds the gradient into
/// `grad` (scaled by `grad_scale`) when non-null.
double loss_cov(const model::CandidateSet& cand, const PatchTarget& target,
                CoverageMode mode = CoverageMode::kExact, model::CandidateGrad* grad = nullptr,
                double grad_scale = 1.0, const nn::Backend& backend = nn::default_backend());

/// Same, from precomputed distances (no point gradients).
double loss_cov_from_distances(const model::CandidateSet& cand, const CandidateDistances& d,
                               CoverageMode mode);

}  // namespace protoscene::loss
