// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container:
//
//   "PSCKPT01"                 8 bytes
//   header length              u64 little-endian
//   header                     JSON (config text, training state, tensor table)
//   payload                    little-endian float64 arrays at the offsets
//                              listed in the tensor table (in doubles)

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "protoscene/model/params.hpp"
#include "protoscene/training/adam.hpp"
#include "protoscene/training/config.hpp"

namespace protoscene::train {

inline constexpr char kCheckpointMagic[9] = "PSCKPT01";

struct TrainState {
  int stage = 1;
  int epochs_in_stage = 0;          // completed epochs of the current stage
  std::uint64_t global_step = 0;
  std::uint64_t stage_step = 0;
  std::vector<double> epoch_losses; // current stage
  bool finished = false;
};

struct NamedArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

struct Checkpoint {
  TrainConfig config;
  TrainState state;
  std::map<std::string, NamedArray> arrays;  // parameters and "adam.m.*" / "adam.v.*"
  std::map<std::string, std::uint64_t> adam_steps;
};

/// Writes atomically (temporary file, then rename).
void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config, const TrainState& state,
                     const model::ParamStore& params, const Adam* adam);

/// Throws FormatError on a corrupt or foreign file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies parameters (and optimiser state when `adam` is non-null) by name.
/// Throws FormatError when a tensor is missing or has the wrong shape.
void restore(const Checkpoint& ckpt, model::ParamStore& params, Adam* adam);

}  // namespace protoscene::train
