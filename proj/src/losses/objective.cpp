// SPDX-License-Identifier: Apache-2.0

#include "protoscene/losses/objective.hpp"

#include "protoscene/errors.hpp"
#include "protoscene/losses/accuracy.hpp"
#include "protoscene/losses/regularizers.hpp"

namespace protoscene::loss {

void LossWeights::validate() const {
  if (lambda_act < 0 || lambda_slot < 0 || lambda_proto < 0 || lambda_translate < 0) {
    throw ParameterError("loss weights must be non-negative");
  }
  if (!(epsilon_s > 0 && epsilon_s <= 1) || !(epsilon_k > 0 && epsilon_k <= 1)) {
    throw ParameterError("loss epsilons must lie in (0,1]");
  }
}

LossReport total_loss(const std::vector<PatchInput>& batch, const LossWeights& w, CoverageMode mode,
                      std::vector<model::CandidateGrad>* grads, const nn::Backend& backend) {
  w.validate();
  LossReport r;
  if (batch.empty()) return r;
  const double b = static_cast<double>(batch.size());
  if (grads) {
    grads->clear();
    for (const auto& p : batch) grads->emplace_back(*p.candidates);
  }

  BatchParams params;
  params.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& cand = *batch[i].candidates;
    model::CandidateGrad* g = grads ? &(*grads)[i] : nullptr;
    r.acc += loss_acc(cand, *batch[i].target, g, 1.0 / b, backend);
    r.cov += loss_cov(cand, *batch[i].target, mode, g, 1.0 / b, backend);
    r.translate_reg += loss_translate_reg(cand.params, g ? &g->slots : nullptr, w.lambda_translate / b);
    params.push_back(cand.params);
  }
  r.acc /= b;
  r.cov /= b;
  r.translate_reg /= b;

  BatchParamGrads pg;
  if (grads) {
    for (const auto& g : *grads) pg.push_back(std::vector<model::SlotParamsGrad>(g.slots.size(), model::SlotParamsGrad(g.intensity.size())));
  }
  BatchParamGrads* pgp = grads ? &pg : nullptr;
  r.act = loss_act(params, pgp, w.lambda_act);
  r.slot = loss_slot(params, w.epsilon_s, pgp, w.lambda_slot);
  r.proto = loss_proto(params, w.epsilon_k, pgp, w.lambda_proto);
  if (grads) {
    for (std::size_t i = 0; i < pg.size(); ++i) {
      for (std::size_t s = 0; s < pg[i].size(); ++s) {
        auto& dst = (*grads)[i].slots[s];
        dst.alpha += pg[i][s].alpha;
        for (std::size_t k = 0; k < dst.beta.size(); ++k) dst.beta[k] += pg[i][s].beta[k];
      }
    }
  }

  r.total = r.acc + r.cov + w.lambda_act * r.act + w.lambda_slot * r.slot + w.lambda_proto * r.proto +
            w.lambda_translate * r.translate_reg;
  return r;
}

double reconstruction_loss(const model::CandidateSet& cand, const PatchTarget& target, CoverageMode mode,
                           const nn::Backend& backend) {
  return loss_acc(cand, target, nullptr, 1.0, backend) + loss_cov(cand, target, mode, nullptr, 1.0, backend);
}

}  // namespace protoscene::loss
