// SPDX-License-Identifier: Apache-2.0

#include "protoscene/io/report.hpp"

#include <algorithm>

namespace protoscene::io {

std::vector<int> prototype_classes(const eval::PrototypeLabels& labels) {
  std::vector<int> out(static_cast<std::size_t>(labels.prototypes), -1);
  for (int k = 0; k < labels.prototypes; ++k) {
    std::map<int, std::size_t> tally;
    for (int p = 0; p < labels.points_per_prototype; ++p) {
      const int l = labels.label(k, p);
      if (l >= 0) ++tally[l];
    }
    std::size_t best = 0;
    for (const auto& [cls, n] : tally) {
      if (n > best) {
        best = n;
        out[static_cast<std::size_t>(k)] = cls;
      }
    }
  }
  return out;
}

EvaluationReport build_report(const eval::Decomposition& d, const geom::PointCloud& scene, int stage,
                              const eval::PrototypeLabels* labels, const std::vector<int>* semantic,
                              const nn::Backend& backend) {
  EvaluationReport r;
  r.stage = stage;
  r.patches = d.patches.size();
  r.chamfer_sym = eval::decomposition_chamfer(d, scene, &r.chamfer_skipped_patches, backend);
  if (labels != nullptr) {
    r.mean_normalized_entropy = labels->mean_normalized_entropy;
    r.prototype_class = prototype_classes(*labels);
    if (semantic != nullptr && scene.class_label) r.iou = eval::miou(*semantic, *scene.class_label);
  } else {
    r.prototype_class.assign(static_cast<std::size_t>(d.prototypes), -1);
  }
  for (int k = 0; k < d.prototypes; ++k) r.instance_counts[k] = eval::count_instances(d, {k});
  return r;
}

nlohmann::json to_json(const eval::SelectionReport& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"removed", s.removed},
                     {"increase", s.increase},
                     {"loss_before", s.loss_before},
                     {"loss_after", s.loss_after}});
  }
  return {{"kept", r.kept}, {"steps", steps}, {"initial_loss", r.initial_loss}, {"final_loss", r.final_loss}};
}

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["stage"] = r.stage;
  j["patches"] = r.patches;
  // Undefined when every patch reconstructs to nothing.
  j["chamfer_sym"] = r.patches > r.chamfer_skipped_patches ? nlohmann::json(r.chamfer_sym) : nlohmann::json(nullptr);
  j["chamfer_skipped_patches"] = r.chamfer_skipped_patches;
  j["miou"] = r.iou ? nlohmann::json(r.iou->miou) : nlohmann::json(nullptr);
  nlohmann::json per_class = nlohmann::json::object();
  if (r.iou) {
    for (const auto& [cls, v] : r.iou->per_class) per_class[std::to_string(cls)] = v;
  }
  j["per_class_iou"] = per_class;
  j["mean_normalized_entropy"] =
      r.mean_normalized_entropy ? nlohmann::json(*r.mean_normalized_entropy) : nlohmann::json(nullptr);
  j["prototype_class"] = r.prototype_class;
  nlohmann::json counts = nlohmann::json::object();
  std::size_t total = 0;
  for (const auto& [k, n] : r.instance_counts) {
    counts[std::to_string(k)] = n;
    total += n;
  }
  j["instance_counts"] = {{"total", total}, {"per_prototype", counts}};
  j["selection_report"] = r.selection ? to_json(*r.selection) : nlohmann::json(nullptr);
  return j;
}

}  // namespace protoscene::io
