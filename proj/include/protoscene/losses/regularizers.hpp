// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "protoscene/model/heads.hpp"

namespace protoscene::loss {

/// Slot parameters of every patch of a batch.
using BatchParams = std::vector<std::vector<model::SlotParams>>;
using BatchParamGrads = std::vector<std::vector<model::SlotParamsGrad>>;

/// Gradients are added into `grad` (same shape as the batch) times `scale`.

/// sum_s mean_B alpha_s
double loss_act(const BatchParams& batch, BatchParamGrads* grad = nullptr, double scale = 1.0);

/// -sum_s min(mean_B alpha_s / sum_t mean_B alpha_t, eps_s); 0 when no slot is ever active.
double loss_slot(const BatchParams& batch, double eps_s, BatchParamGrads* grad = nullptr,
                 double scale = 1.0);

/// -sum_k min(mean_B sum_s beta_s^k / sum_s mean_B alpha_s, eps_k); 0 when no slot is ever active.
double loss_proto(const BatchParams& batch, double eps_k, BatchParamGrads* grad = nullptr,
                  double scale = 1.0);

/// sum_s of the squared distance from the translation to [-1,1]^2 x R.
double loss_translate_reg(const std::vector<model::SlotParams>& slots,
                          std::vector<model::SlotParamsGrad>* grad = nullptr, double scale = 1.0);

}  // namespace protoscene::loss
