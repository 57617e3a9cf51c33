// SPDX-License-Identifier: Apache-2.0

#include "protoscene/evaluation/selection.hpp"

#include <limits>

#include "protoscene/errors.hpp"
#include "protoscene/losses/objective.hpp"
#include "protoscene/training/patches.hpp"

namespace protoscene::eval {

MaskedLossEvaluator::MaskedLossEvaluator(const model::Network& net, const model::CurriculumStage& stage,
                                         const geom::PointCloud& scene, const SelectionOptions& opts,
                                         const nn::Backend& backend)
    : net_(&net), stage_(stage), coverage_(opts.coverage), backend_(&backend), bank_(net.bank()) {
  if (!(opts.patch_size_m > 0.0)) throw ParameterError("selection: patch size must be positive");
  for (const auto& patch : train::inference_grid(scene, opts.patch_size_m)) {
    model::Network::Cache cache;
    raw_.push_back(net.heads(patch.cloud, cache));
    targets_.push_back(loss::PatchTarget::from_patch(patch.cloud, opts.use_intensity));
  }
}

double MaskedLossEvaluator::operator()(const std::vector<bool>& live) const {
  if (raw_.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    std::vector<model::SlotParams> params;
    params.reserve(raw_[i].size());
    for (const auto& r : raw_[i]) params.push_back(model::decode_slot(r, net_->config(), stage_, &live));
    const model::CandidateSet cand = model::build_candidates(params, bank_);
    sum += loss::reconstruction_loss(cand, targets_[i], coverage_, *backend_);
  }
  return sum / static_cast<double>(raw_.size());
}

SelectionReport select_prototypes(const model::Network& net, const model::CurriculumStage& stage,
                                  const geom::PointCloud& scene, const SelectionOptions& opts,
                                  const nn::Backend& backend) {
  const int K = net.config().prototypes;
  MaskedLossEvaluator eval(net, stage, scene, opts, backend);
  std::vector<bool> live(K, true);
  SelectionReport r;
  r.initial_loss = eval(live);
  double current = r.initial_loss;
  auto relative = [&](double after) {
    const double ref = opts.relative_to_current ? current : r.initial_loss;
    if (ref > 0.0) return (after - current) / ref;
    return after > current ? std::numeric_limits<double>::infinity() : 0.0;
  };
  int alive = K;
  while (alive > 1) {
    int best = -1;
    double best_inc = std::numeric_limits<double>::infinity();
    double best_loss = 0.0;
    for (int k = 0; k < K; ++k) {
      if (!live[k]) continue;
      live[k] = false;
      const double l = eval(live);
      live[k] = true;
      const double inc = relative(l);
      if (inc < best_inc) {
        best_inc = inc;
        best = k;
        best_loss = l;
      }
    }
    if (best < 0 || !(best_inc < opts.threshold)) break;
    live[best] = false;
    --alive;
    r.steps.push_back({best, best_inc, current, best_loss});
    current = best_loss;
  }
  for (int k = 0; k < K; ++k) {
    if (live[k]) r.kept.push_back(k);
  }
  r.final_loss = current;
  return r;
}

}  // namespace protoscene::eval
