// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"
#include "protoscene/model/candidates.hpp"
#include "protoscene/model/config.hpp"
#include "protoscene/model/encoder.hpp"
#include "protoscene/model/heads.hpp"
#include "protoscene/model/layers.hpp"
#include "protoscene/model/params.hpp"
#include "protoscene/model/prototypes.hpp"

namespace protoscene::model {

/// Slot kept at inference: alpha > 0.5, prototype = argmax beta (lowest index on ties).
struct ActiveSlot {
  int slot = 0;
  int prototype = 0;
};

std::vector<ActiveSlot> select_active(const std::vector<SlotParams>& params);

/// Encoder, per-slot feature maps, five shared heads and the prototype bank,
/// all stored in one ParamStore.
class Network {
 public:
  enum Head { kProba = 0, kScale, kTilt, kRot, kTranslate, kHeadCount };

  struct Cache {
    SceneEncoder::Cache encoder;
    std::vector<double> feature;
    std::vector<DenseBlock::Cache> slot;
    std::vector<std::array<Mlp3::Cache, kHeadCount>> heads;
    std::vector<SlotRaw> raw;
  };

  struct Forward {
    Cache cache;
    std::vector<SlotParams> params;
    PrototypeBank bank;
    CandidateSet candidates;
  };

  Network(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  PrototypeBank bank() const;
  void set_bank(const PrototypeBank& bank);
  void accumulate_bank_grad(const PrototypeBankGrad& grad);

  /// Scene feature of a patch (width scene_width).
  std::vector<double> encode(const geom::PointCloud& patch) const;

  /// Raw head outputs for every slot; fills `cache` for backward.
  std::vector<SlotRaw> heads(const geom::PointCloud& patch, Cache& cache) const;

  std::vector<SlotParams> slot_heads(const geom::PointCloud& patch, const CurriculumStage& stage,
                                     const std::vector<bool>* live = nullptr) const;

  /// Full forward pass to the S x K candidates. `live` masks prototypes.
  Forward reconstruct(const geom::PointCloud& patch, const CurriculumStage& stage,
                      const std::vector<bool>* live = nullptr) const;

  /// Accumulates parameter gradients given the gradient of an objective with
  /// respect to the candidates of `fwd`.
  void backward(const Forward& fwd, CandidateGrad& grad, const CurriculumStage& stage);

 private:
  ModelConfig cfg_;
  ParamStore store_;
  SceneEncoder encoder_;
  std::vector<DenseBlock> slot_blocks_;
  std::array<Mlp3, kHeadCount> heads_;
  std::size_t proto_points_ = 0;
  std::size_t proto_intensity_ = 0;
  std::size_t proto_base_ = 0;
  std::size_t proto_aniso_ = 0;
};

}  // namespace protoscene::model
