// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace protoscene::train {

/// Linear ramp from base_lr / 1000 at step 0 to base_lr at warmup_batches.
double warmup_lr(std::uint64_t step_in_stage, double base_lr, std::uint64_t warmup_batches);

/// Plateau rule: true once the best loss of the last `patience` epochs is not
/// lower than the best loss before them by at least min_rel_improvement
/// (relative). Needs more than `patience` epochs of history.
bool advance_stage(const std::vector<double>& epoch_losses, int patience, double min_rel_improvement);

}  // namespace protoscene::train
