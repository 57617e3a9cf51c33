// SPDX-License-Identifier: Apache-2.0
//
// Evaluation report and its JSON form (schema in docs/report_schema.md).

#pragma once

#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "protoscene/evaluation/metrics.hpp"
#include "protoscene/evaluation/segmentation.hpp"
#include "protoscene/evaluation/selection.hpp"

namespace protoscene::io {

struct EvaluationReport {
  int stage = 0;
  std::size_t patches = 0;
  double chamfer_sym = 0.0;
  std::size_t chamfer_skipped_patches = 0;
  std::optional<eval::IouReport> iou;              // absent for unlabelled scenes
  std::optional<double> mean_normalized_entropy;
  std::vector<int> prototype_class;                // majority class per prototype, -1 unknown
  std::map<int, std::size_t> instance_counts;      // per prototype
  std::optional<eval::SelectionReport> selection;
};

/// Majority label per prototype over its voted points (lowest id on ties).
std::vector<int> prototype_classes(const eval::PrototypeLabels& labels);

/// Fills everything except `selection`. `labels` may be null for an
/// unlabelled scene, in which case `semantic` is ignored.
EvaluationReport build_report(const eval::Decomposition& d, const geom::PointCloud& scene, int stage,
                              const eval::PrototypeLabels* labels, const std::vector<int>* semantic,
                              const nn::Backend& backend = nn::default_backend());

nlohmann::json to_json(const eval::SelectionReport& r);
nlohmann::json to_json(const EvaluationReport& r);

}  // namespace protoscene::io
