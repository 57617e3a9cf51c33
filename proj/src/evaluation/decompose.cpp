// SPDX-License-Identifier: Apache-2.0

#include "protoscene/evaluation/decompose.hpp"

#include "protoscene/errors.hpp"
#include "protoscene/losses/target.hpp"

namespace protoscene::eval {

geom::PointCloud patch_reconstruction(const PatchDecomposition& p, std::vector<std::pair<int, int>>* owner) {
  geom::PointCloud out;
  out.frame = geom::Frame::kPatchNormalized;
  out.intensity = std::vector<double>{};
  if (owner) owner->clear();
  for (std::size_t a = 0; a < p.clouds.size(); ++a) {
    const auto& c = p.clouds[a];
    for (std::size_t i = 0; i < c.size(); ++i) {
      out.positions.push_back(c.positions[i]);
      out.intensity->push_back((*c.intensity)[i]);
      if (owner) owner->emplace_back(static_cast<int>(a), static_cast<int>(i));
    }
  }
  return out;
}

Decomposition decompose(const model::Network& net, const model::CurriculumStage& stage,
                        const geom::PointCloud& scene, const DecomposeOptions& opts,
                        const nn::Backend& backend) {
  if (!(opts.patch_size_m > 0.0)) throw ParameterError("decompose: patch size must be positive");
  Decomposition d;
  d.scene_size = scene.size();
  d.patch_size_m = opts.patch_size_m;
  d.prototypes = net.config().prototypes;
  d.points_per_prototype = net.config().points_per_prototype;
  const model::PrototypeBank bank = net.bank();

  for (train::Patch& patch : train::inference_grid(scene, opts.patch_size_m)) {
    PatchDecomposition pd;
    pd.frame = patch.frame;
    pd.source = std::move(patch.source);
    pd.params = net.slot_heads(patch.cloud, stage, opts.live);
    pd.active = model::select_active(pd.params);
    pd.point_active.assign(patch.cloud.size(), -1);
    pd.point_proto_point.assign(patch.cloud.size(), -1);
    for (const auto& a : pd.active) {
      geom::PointCloud c = bank.scaled_cloud(a.prototype);
      const auto m = pd.params[a.slot].transform.matrix();
      for (auto& p : c.positions) p = m * p + pd.params[a.slot].transform.translation;
      c.frame = geom::Frame::kPatchNormalized;
      pd.clouds.push_back(std::move(c));
    }
    const loss::PatchTarget target = loss::PatchTarget::from_patch(patch.cloud, opts.use_intensity);
    pd.use_intensity = target.space.with_intensity;
    if (!pd.active.empty()) {
      std::vector<std::pair<int, int>> owner;
      const geom::PointCloud recon = patch_reconstruction(pd, &owner);
      const geom::FeatureCloud rf = target.space.map(recon);
      const auto nn = nn::nearest(target.x.coords, rf.coords, rf.dim, backend);
      for (std::size_t i = 0; i < patch.cloud.size(); ++i) {
        pd.point_active[i] = owner[nn.index[i]].first;
        pd.point_proto_point[i] = owner[nn.index[i]].second;
      }
    }
    d.patches.push_back(std::move(pd));
  }
  return d;
}

geom::PointCloud scene_reconstruction(const Decomposition& d) {
  geom::PointCloud out;
  out.intensity = std::vector<double>{};
  out.class_label = std::vector<int>{};
  out.instance_label = std::vector<int>{};
  int instance = 0;
  for (const auto& p : d.patches) {
    for (std::size_t a = 0; a < p.clouds.size(); ++a, ++instance) {
      const auto& c = p.clouds[a];
      for (std::size_t i = 0; i < c.size(); ++i) {
        out.positions.push_back(p.frame.to_scene(c.positions[i]));
        out.intensity->push_back((*c.intensity)[i]);
        out.class_label->push_back(p.active[a].prototype);
        out.instance_label->push_back(instance);
      }
    }
  }
  return out;
}

}  // namespace protoscene::eval
