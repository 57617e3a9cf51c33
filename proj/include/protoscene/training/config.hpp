// SPDX-License-Identifier: Apache-2.0
//
// Run configuration and its text form: a flat, sectioned key = value file.
//
//   # comment
//   [model]
//   slots = 64
//   transform_mode = constrained

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "protoscene/losses/coverage.hpp"
#include "protoscene/losses/objective.hpp"
#include "protoscene/model/config.hpp"

namespace protoscene::train {

struct Convergence {
  int patience_epochs = 5;
  double min_rel_improvement = 1e-3;
  int max_epochs_per_stage = 100;
};

struct EvalConfig {
  double selection_threshold = 0.05;
  /// Removal increases are measured against the current loss, or against
  /// the loss of the full model when false.
  bool selection_relative_to_current = true;
};

struct TrainConfig {
  /// 0 selects grid_resolution * voxel_size_m.
  double patch_size_m = 0.0;
  int max_points_per_patch = 100000;
  int batch_size = 64;
  int batches_per_epoch = 512;
  double base_lr = 1e-4;
  int warmup_batches = 1000;
  double weight_decay = 0.0;
  int first_stage = 1;
  int last_stage = 5;
  std::uint64_t seed = 0;
  bool deterministic = false;
  Convergence convergence;
  loss::LossWeights loss_weights;
  loss::CoverageMode coverage = loss::CoverageMode::kExact;
  model::ModelConfig model;
  EvalConfig evaluation;

  double patch_size() const {
    return patch_size_m > 0.0 ? patch_size_m : model.grid_resolution * model.voxel_size_m;
  }

  /// Throws ParameterError on invalid settings.
  void validate() const;
};

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const TrainConfig& c);

/// Starts from `base` and applies every assignment in `text`. Throws
/// FormatError on syntax errors, unknown sections or keys and bad values.
TrainConfig parse_config(std::string_view text, const TrainConfig& base = {});

bool operator==(const TrainConfig& a, const TrainConfig& b);

}  // namespace protoscene::train
