// SPDX-License-Identifier: Apache-2.0
//
// Reference evaluations of the coverage loss straight from its probabilistic
// definition. Slow; for testing.

#pragma once

#include <cstdint>

#include "protoscene/losses/target.hpp"

namespace protoscene::loss {

inline constexpr int kMaxEnumerateSlots = 6;

/// Sum over every joint draw (each slot inactive or one prototype) of its
/// probability times the mean over X of the distance to the nearest realised
/// candidate (0 when nothing is realised). Throws ParameterError when S > 6.
double loss_cov_enumerate(const model::CandidateSet& cand, const PatchTarget& target);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Empirical mean of `samples` random draws. Throws ParameterError when samples < 2.
MonteCarloEstimate loss_cov_montecarlo(const model::CandidateSet& cand, const PatchTarget& target,
                                       std::uint64_t samples, std::uint64_t seed);

}  // namespace protoscene::loss
