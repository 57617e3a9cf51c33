// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "protoscene/model/params.hpp"

namespace protoscene::train {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 term weight_decay * w added to the gradient; never applied to
  /// prototype groups.
  double weight_decay = 0.0;
};

/// Adam with per-tensor moment buffers and step counts.
class Adam {
 public:
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
  };

  Adam(const model::ParamStore& store, AdamOptions opts = {});

  /// Updates every tensor for which `trainable` holds; others are untouched.
  void step(model::ParamStore& store, double lr, const std::function<bool(const model::Tensor&)>& trainable);

  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }
  const AdamOptions& options() const { return opts_; }

 private:
  AdamOptions opts_;
  std::vector<Slot> slots_;
};

}  // namespace protoscene::train
