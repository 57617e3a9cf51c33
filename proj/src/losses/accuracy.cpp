// SPDX-License-Identifier: Apache-2.0

#include "protoscene/losses/accuracy.hpp"

#include <vector>

namespace protoscene::loss {

double loss_acc(const model::CandidateSet& cand, const PatchTarget& target, model::CandidateGrad* grad,
                double grad_scale, const nn::Backend& backend) {
  const int S = cand.slots;
  const int K = cand.prototypes;
  if (S == 0) return 0.0;
  const int dim = target.x.dim;
  const auto index = backend.build(target.x.coords, dim);
  std::vector<std::uint32_t> kept;
  std::vector<double> dist;
  std::vector<std::uint32_t> nn;
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) {
      const double beta = cand.params[s].beta[k];
      if (beta == 0.0 && !grad) continue;
      const geom::FeatureCloud y = map_candidate(cand, s, k, target.space, true, &kept);
      const std::size_t n = y.size();
      if (n == 0) continue;
      dist.resize(n);
      nn.resize(n);
      index->query(y.coords, dist, nn);
      double sum = 0.0;
      for (double v : dist) sum += v;
      const double d = sum / static_cast<double>(n);
      total += beta * d;
      if (!grad) continue;
      grad->slots[s].beta[k] += grad_scale * d / S;
      if (beta == 0.0) continue;
      const double w = grad_scale * beta / S * 2.0 / static_cast<double>(n);
      double g[4];
      for (std::size_t i = 0; i < n; ++i) {
        const double* yp = y.point(i);
        const double* xp = target.x.point(nn[i]);
        for (int c = 0; c < dim; ++c) g[c] = w * (yp[c] - xp[c]);
        add_point_grad(target.space, k, cand.offset(s, k) + kept[i], g, *grad);
      }
    }
  }
  return total / S;
}

}  // namespace protoscene::loss
