// SPDX-License-Identifier: Apache-2.0

#include "protoscene/evaluation/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "protoscene/errors.hpp"
#include "protoscene/losses/target.hpp"

namespace protoscene::eval {

PrototypeLabels label_prototypes(const Decomposition& d, const geom::PointCloud& scene,
                                 const nn::Backend& backend) {
  if (!scene.class_label) throw DomainError("label_prototypes: scene has no class labels");
  int max_class = -1;
  std::size_t labelled = 0;
  for (int c : *scene.class_label) {
    if (c >= 0) {
      ++labelled;
      max_class = std::max(max_class, c);
    }
  }
  if (labelled == 0) throw DomainError("label_prototypes: scene has no labelled point");

  PrototypeLabels out;
  out.prototypes = d.prototypes;
  out.points_per_prototype = d.points_per_prototype;
  const std::size_t n = static_cast<std::size_t>(d.prototypes) * d.points_per_prototype;
  out.labels.assign(n, -1);
  out.votes.assign(n, std::vector<std::size_t>(static_cast<std::size_t>(max_class) + 1, 0));

  for (const auto& p : d.patches) {
    if (p.empty()) continue;
    std::vector<std::size_t> lab;
    for (std::size_t i = 0; i < p.source.size(); ++i) {
      if ((*scene.class_label)[p.source[i]] >= 0) lab.push_back(i);
    }
    if (lab.empty()) continue;
    geom::PointCloud patch = scene.subset(p.source);
    for (auto& q : patch.positions) q = p.frame.to_patch(q);
    const loss::PatchTarget target = loss::PatchTarget::from_patch(patch, p.use_intensity);
    geom::FeatureCloud ref;
    ref.dim = target.x.dim;
    for (std::size_t i : lab) ref.coords.insert(ref.coords.end(), target.x.point(i), target.x.point(i) + ref.dim);
    for (std::size_t a = 0; a < p.active.size(); ++a) {
      const geom::FeatureCloud q = target.space.map(p.clouds[a]);
      const auto nn = nn::nearest(q.coords, ref.coords, ref.dim, backend);
      const int k = p.active[a].prototype;
      for (std::size_t j = 0; j < q.size(); ++j) {
        const int cls = (*scene.class_label)[p.source[lab[nn.index[j]]]];
        ++out.votes[static_cast<std::size_t>(k) * d.points_per_prototype + j][static_cast<std::size_t>(cls)];
      }
    }
  }

  const int classes_present = [&] {
    std::vector<bool> seen(static_cast<std::size_t>(max_class) + 1, false);
    for (int c : *scene.class_label) {
      if (c >= 0) seen[static_cast<std::size_t>(c)] = true;
    }
    return static_cast<int>(std::count(seen.begin(), seen.end(), true));
  }();
  double entropy_sum = 0.0;
  std::size_t voted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = out.votes[i];
    std::size_t total = 0;
    std::size_t best = 0;
    for (std::size_t c = 0; c < v.size(); ++c) {
      total += v[c];
      if (v[c] > v[best]) best = c;
    }
    if (total == 0) continue;
    out.labels[i] = static_cast<int>(best);
    ++voted;
    if (classes_present > 1) {
      double h = 0.0;
      for (std::size_t c : v) {
        if (c == 0) continue;
        const double q = static_cast<double>(c) / static_cast<double>(total);
        h -= q * std::log(q);
      }
      entropy_sum += h / std::log(static_cast<double>(classes_present));
    }
  }
  out.mean_normalized_entropy = voted ? entropy_sum / static_cast<double>(voted) : 0.0;
  return out;
}

std::vector<int> semantic_segmentation(const Decomposition& d, const PrototypeLabels& labels) {
  std::vector<int> out(d.scene_size, -1);
  for (const auto& p : d.patches) {
    for (std::size_t i = 0; i < p.source.size(); ++i) {
      const int a = p.point_active[i];
      if (a < 0) continue;
      out[p.source[i]] = labels.label(p.active[static_cast<std::size_t>(a)].prototype, p.point_proto_point[i]);
    }
  }
  return out;
}

std::vector<int> instance_segmentation(const Decomposition& d, const std::set<int>& targets) {
  std::vector<int> out(d.scene_size, -1);
  int next = 0;
  for (const auto& p : d.patches) {
    std::vector<int> id(p.active.size(), -1);
    for (std::size_t a = 0; a < p.active.size(); ++a) {
      if (targets.count(p.active[a].prototype)) id[a] = next++;
    }
    for (std::size_t i = 0; i < p.source.size(); ++i) {
      const int a = p.point_active[i];
      if (a >= 0) out[p.source[i]] = id[static_cast<std::size_t>(a)];
    }
  }
  return out;
}

std::size_t count_instances(const Decomposition& d, const std::set<int>& targets) {
  std::size_t n = 0;
  for (const auto& p : d.patches) {
    for (const auto& a : p.active) n += targets.count(a.prototype);
  }
  return n;
}

}  // namespace protoscene::eval
