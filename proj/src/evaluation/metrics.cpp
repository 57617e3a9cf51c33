// SPDX-License-Identifier: Apache-2.0

#include "protoscene/evaluation/metrics.hpp"

#include <cmath>
#include <set>

#include "protoscene/errors.hpp"
#include "protoscene/geometry/chamfer.hpp"
#include "protoscene/losses/target.hpp"

namespace protoscene::eval {

IouReport miou(const std::vector<int>& pred, const std::vector<int>& gt) {
  if (pred.size() != gt.size()) throw ParameterError("miou: prediction and ground truth lengths differ");
  std::map<int, std::size_t> inter, pred_count, gt_count;
  std::size_t labelled = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] < 0) continue;
    ++labelled;
    ++gt_count[gt[i]];
    ++pred_count[pred[i]];
    if (pred[i] == gt[i]) ++inter[gt[i]];
  }
  if (labelled == 0) throw DomainError("miou: no labelled points");
  IouReport r;
  double sum = 0.0;
  for (const auto& [c, g] : gt_count) {
    const std::size_t in = inter[c];
    const std::size_t uni = g + pred_count[c] - in;
    const double iou = 100.0 * static_cast<double>(in) / static_cast<double>(uni);
    r.per_class[c] = iou;
    sum += iou;
  }
  r.miou = sum / static_cast<double>(gt_count.size());
  return r;
}

CountReport count_mre(const std::vector<double>& predicted, const std::vector<double>& truth) {
  if (predicted.size() != truth.size()) throw ParameterError("count_mre: length mismatch");
  CountReport r;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t z = 0; z < truth.size(); ++z) {
    if (truth[z] == 0.0) {
      r.excluded.push_back(z);
      continue;
    }
    sum += std::abs(predicted[z] - truth[z]) / truth[z];
    ++used;
  }
  if (used == 0) throw DomainError("count_mre: every zone has a zero true count");
  r.mre = 100.0 * sum / static_cast<double>(used);
  return r;
}

double decomposition_chamfer(const Decomposition& d, const geom::PointCloud& scene, std::size_t* skipped,
                             const nn::Backend& backend) {
  double sum = 0.0;
  std::size_t used = 0;
  std::size_t skip = 0;
  for (const auto& p : d.patches) {
    geom::PointCloud patch = scene.subset(p.source);
    for (auto& q : patch.positions) q = p.frame.to_patch(q);
    const geom::PointCloud recon = geom::clip_to_extent(patch_reconstruction(p));
    if (recon.empty()) {
      ++skip;
      continue;
    }
    const loss::PatchTarget target = loss::PatchTarget::from_patch(patch, p.use_intensity);
    sum += geom::chamfer_sym(target.x, target.space.map(recon), backend);
    ++used;
  }
  if (skipped) *skipped = skip;
  return used ? sum / static_cast<double>(used) : 0.0;
}

}  // namespace protoscene::eval
