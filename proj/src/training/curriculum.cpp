// SPDX-License-Identifier: Apache-2.0

#include "protoscene/training/curriculum.hpp"

#include <algorithm>

namespace protoscene::train {

double warmup_lr(std::uint64_t step, double base_lr, std::uint64_t warmup) {
  const double start = base_lr / 1000.0;
  if (warmup == 0 || step >= warmup) return base_lr;
  return start + (base_lr - start) * (static_cast<double>(step) / static_cast<double>(warmup));
}

bool advance_stage(const std::vector<double>& h, int patience, double min_rel) {
  const auto n = h.size();
  const auto p = static_cast<std::size_t>(std::max(patience, 1));
  if (n <= p) return false;
  const double before = *std::min_element(h.begin(), h.end() - static_cast<std::ptrdiff_t>(p));
  const double recent = *std::min_element(h.end() - static_cast<std::ptrdiff_t>(p), h.end());
  return before - recent < min_rel * std::abs(before);
}

}  // namespace protoscene::train
