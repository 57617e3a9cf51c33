// SPDX-License-Identifier: Apache-2.0

#include "protoscene/model/params.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace protoscene::model {

std::size_t ParamStore::add(std::string name, ParamGroup group, std::vector<std::size_t> shape) {
  Tensor t;
  t.name = std::move(name);
  t.group = group;
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  t.shape = std::move(shape);
  t.value.assign(n, 0.0);
  t.grad.assign(n, 0.0);
  tensors_.push_back(std::move(t));
  return tensors_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return std::nullopt;
}

void ParamStore::zero_grad() {
  for (Tensor& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.size();
  return n;
}

}  // namespace protoscene::model
