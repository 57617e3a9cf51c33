// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "protoscene/losses/target.hpp"
#include "protoscene/nn/backend.hpp"

namespace protoscene::loss {

/// (1/S) sum_s sum_k beta_s^k d(clip(Y_s^k), X). Candidates with no point
/// inside the patch extent contribute 0. Adds the gradient into `grad` when
/// non-null.
double loss_acc(const model::CandidateSet& cand, const PatchTarget& target,
                model::CandidateGrad* grad = nullptr, double grad_scale = 1.0,
                const nn::Backend& backend = nn::default_backend());

}  // namespace protoscene::loss
