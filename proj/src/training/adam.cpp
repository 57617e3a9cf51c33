// SPDX-License-Identifier: Apache-2.0

#include "protoscene/training/adam.hpp"

#include <cmath>

namespace protoscene::train {

Adam::Adam(const model::ParamStore& store, AdamOptions opts) : opts_(opts) {
  slots_.resize(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    slots_[i].m.assign(store[i].size(), 0.0);
    slots_[i].v.assign(store[i].size(), 0.0);
  }
}

void Adam::step(model::ParamStore& store, double lr,
                const std::function<bool(const model::Tensor&)>& trainable) {
  for (std::size_t i = 0; i < store.count(); ++i) {
    model::Tensor& t = store[i];
    if (!trainable(t)) continue;
    Slot& s = slots_[i];
    ++s.t;
    const double decay = model::is_prototype_group(t.group) ? 0.0 : opts_.weight_decay;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(s.t));
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double g = t.grad[j] + decay * t.value[j];
      s.m[j] = opts_.beta1 * s.m[j] + (1.0 - opts_.beta1) * g;
      s.v[j] = opts_.beta2 * s.v[j] + (1.0 - opts_.beta2) * g * g;
      const double mh = s.m[j] / c1;
      const double vh = s.v[j] / c2;
      t.value[j] -= lr * mh / (std::sqrt(vh) + opts_.eps);
    }
  }
}

}  // namespace protoscene::train
