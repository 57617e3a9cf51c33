// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"
#include "protoscene/losses/objective.hpp"
#include "protoscene/model/network.hpp"
#include "protoscene/training/adam.hpp"
#include "protoscene/training/checkpoint.hpp"
#include "protoscene/training/config.hpp"
#include "protoscene/training/patches.hpp"

namespace protoscene::train {

struct StepReport {
  std::uint64_t step = 0;
  int stage = 1;
  int epoch = 0;
  double lr = 0.0;
  loss::LossReport loss;
};

/// Raised when a step produces a non-finite loss or gradient. The offending
/// batch has been dumped to `dump_dir` (when the trainer has an output dir).
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const std::string& what, std::filesystem::path dump)
      : std::runtime_error(what), dump_dir(std::move(dump)) {}
  std::filesystem::path dump_dir;
};

/// First stage >= `from` that unlocks something under `cfg`, or 0.
int next_enabled_stage(int from, const TrainConfig& cfg);

/// Curriculum training on one scene. With an empty output directory nothing
/// is written to disk.
class Trainer {
 public:
  Trainer(const geom::PointCloud& scene, const TrainConfig& config, std::filesystem::path out_dir = {});
  ~Trainer();

  /// Continues from a checkpoint written by a previous run.
  static std::unique_ptr<Trainer> resume(const geom::PointCloud& scene, const std::filesystem::path& ckpt,
                                         std::filesystem::path out_dir = {});

  /// Runs the remaining curriculum.
  void run();

  /// One optimisation step at the current state (does not close epochs).
  StepReport step();

  /// Closes an epoch with the given mean loss: records it, checkpoints and
  /// advances the stage when converged.
  void end_epoch(double mean_loss);

  /// Loss of the batch for `step` under the current parameters, without updating.
  loss::LossReport evaluate_batch(std::uint64_t step) const;

  std::vector<Patch> batch_for_step(std::uint64_t step) const;

  model::Network& network() { return *net_; }
  const model::Network& network() const { return *net_; }
  const TrainState& state() const { return state_; }
  const TrainConfig& config() const { return cfg_; }
  model::CurriculumStage stage() const { return {state_.stage}; }

  std::function<void(const StepReport&)> on_step;

 private:
  void write_metrics(const StepReport& r);
  void dump_batch(const std::vector<Patch>& batch, const loss::LossReport& r, const std::filesystem::path& dir) const;
  std::filesystem::path save(const std::string& name);

  const geom::PointCloud* scene_;
  TrainConfig cfg_;
  std::filesystem::path out_dir_;
  std::unique_ptr<SceneIndex> index_;
  std::unique_ptr<model::Network> net_;
  std::unique_ptr<Adam> adam_;
  TrainState state_;
  std::optional<std::future<std::vector<Patch>>> prefetch_;
  std::uint64_t prefetch_step_ = 0;
};

/// A trained model restored from a checkpoint.
struct LoadedModel {
  TrainConfig config;
  TrainState state;
  std::unique_ptr<model::Network> network;

  model::CurriculumStage stage() const { return {state.stage}; }
};

LoadedModel load_model(const std::filesystem::path& ckpt);

/// Latest checkpoint of a run directory (named in its "latest" file).
std::filesystem::path latest_checkpoint(const std::filesystem::path& run_dir);

}  // namespace protoscene::train
