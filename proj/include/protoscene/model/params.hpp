// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "protoscene/model/config.hpp"

namespace protoscene::model {

/// A named learnable tensor with its gradient accumulator.
struct Tensor {
  std::string name;
  ParamGroup group = ParamGroup::kEncoder;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
};

/// Flat registry of all model parameters, addressed by stable index or name.
class ParamStore {
 public:
  std::size_t add(std::string name, ParamGroup group, std::vector<std::size_t> shape);

  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  std::size_t count() const { return tensors_.size(); }

  std::optional<std::size_t> find(const std::string& name) const;

  double* value(std::size_t i) { return tensors_[i].value.data(); }
  const double* value(std::size_t i) const { return tensors_[i].value.data(); }
  double* grad(std::size_t i) { return tensors_[i].grad.data(); }

  void zero_grad();
  std::size_t total_size() const;

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace protoscene::model
