// SPDX-License-Identifier: Apache-2.0

#include "protoscene/losses/regularizers.hpp"

#include <algorithm>
#include <cmath>

namespace protoscene::loss {

namespace {

std::vector<double> mean_alpha(const BatchParams& batch) {
  std::vector<double> u(batch.empty() ? 0 : batch.front().size(), 0.0);
  for (const auto& slots : batch) {
    for (std::size_t s = 0; s < slots.size(); ++s) u[s] += slots[s].alpha;
  }
  for (double& v : u) v /= static_cast<double>(batch.size());
  return u;
}

}  // namespace

double loss_act(const BatchParams& batch, BatchParamGrads* grad, double scale) {
  if (batch.empty()) return 0.0;
  const std::vector<double> u = mean_alpha(batch);
  double total = 0.0;
  for (double v : u) total += v;
  if (grad) {
    const double g = scale / static_cast<double>(batch.size());
    for (auto& slots : *grad) {
      for (auto& sg : slots) sg.alpha += g;
    }
  }
  return total;
}

double loss_slot(const BatchParams& batch, double eps_s, BatchParamGrads* grad, double scale) {
  if (batch.empty()) return 0.0;
  const std::vector<double> u = mean_alpha(batch);
  double T = 0.0;
  for (double v : u) T += v;
  if (!(T > 0.0)) return 0.0;
  double total = 0.0;
  double sum_unsat = 0.0;
  std::vector<bool> unsat(u.size());
  for (std::size_t s = 0; s < u.size(); ++s) {
    const double r = u[s] / T;
    unsat[s] = r < eps_s;
    total -= unsat[s] ? r : eps_s;
    if (unsat[s]) sum_unsat += u[s];
  }
  if (grad) {
    const double b = static_cast<double>(batch.size());
    for (auto& slots : *grad) {
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const double du = (unsat[s] ? -1.0 / T : 0.0) + sum_unsat / (T * T);
        slots[s].alpha += scale * du / b;
      }
    }
  }
  return total;
}

double loss_proto(const BatchParams& batch, double eps_k, BatchParamGrads* grad, double scale) {
  if (batch.empty() || batch.front().empty()) return 0.0;
  const std::size_t K = batch.front().front().beta.size();
  const double b = static_cast<double>(batch.size());
  std::vector<double> v(K, 0.0);
  double T = 0.0;
  for (const auto& slots : batch) {
    for (const auto& sp : slots) {
      T += sp.alpha;
      for (std::size_t k = 0; k < K; ++k) v[k] += sp.beta[k];
    }
  }
  T /= b;
  for (double& x : v) x /= b;
  if (!(T > 0.0)) return 0.0;
  double total = 0.0;
  double sum_unsat = 0.0;
  std::vector<bool> unsat(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double r = v[k] / T;
    unsat[k] = r < eps_k;
    total -= unsat[k] ? r : eps_k;
    if (unsat[k]) sum_unsat += v[k];
  }
  if (grad) {
    const double dT = sum_unsat / (T * T);
    for (auto& slots : *grad) {
      for (auto& sg : slots) {
        sg.alpha += scale * dT / b;
        for (std::size_t k = 0; k < K; ++k) {
          if (unsat[k]) sg.beta[k] += scale * (-1.0 / T) / b;
        }
      }
    }
  }
  return total;
}

double loss_translate_reg(const std::vector<model::SlotParams>& slots,
                          std::vector<model::SlotParamsGrad>* grad, double scale) {
  double total = 0.0;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const geom::Vec3& t = slots[s].transform.translation;
    for (int d = 0; d < 2; ++d) {
      const double over = std::max(std::abs(t[d]) - 1.0, 0.0);
      total += over * over;
      if (grad && over > 0.0) (*grad)[s].translation[d] += scale * 2.0 * over * (t[d] > 0.0 ? 1.0 : -1.0);
    }
  }
  return total;
}

}  // namespace protoscene::loss
