// SPDX-License-Identifier: Apache-2.0
//
// Point and scene encoders: per-point linear embedding of a 10-D descriptor,
// voxel max-pooling, then alternating submanifold sparse convolutions (3^3)
// and strided sparse convolutions (2^3, stride 2) down to a single site.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"
#include "protoscene/geometry/voxel_grid.hpp"
#include "protoscene/model/config.hpp"
#include "protoscene/model/layers.hpp"

namespace protoscene::model {

inline constexpr int kDescriptorWidth = 10;
/// Colour / reflectance fill value for clouds without those channels.
inline constexpr double kMissingChannelFill = 0.5;

/// Sparse convolution whose taps index into an input feature array.
/// Weights are stored as (taps, out, in).
struct SparseConv {
  std::size_t weight = 0;
  std::size_t bias = 0;
  int taps = 0;
  int in = 0;
  int out = 0;

  static SparseConv create(ParamStore& store, const std::string& name, int taps, int in, int out);
  void init_uniform(ParamStore& store, std::mt19937_64& rng) const;

  /// `tap_index` is (n_out x taps); -1 marks an absent input site.
  void forward(const ParamStore& store, const std::vector<double>& x,
               const std::vector<std::int32_t>& tap_index, std::size_t n_out,
               std::vector<double>& y) const;
  void backward(ParamStore& store, const std::vector<double>& x,
                const std::vector<std::int32_t>& tap_index, const std::vector<double>& dy,
                std::vector<double>& dx) const;
};

/// Active sites of every level and how they connect.
struct Rulebook {
  std::vector<std::vector<std::int64_t>> sites;       // level 0..L, sorted ids
  std::vector<std::vector<std::int32_t>> neighbors;   // level 0..L-1, n_l x 27
  std::vector<std::vector<std::int32_t>> children;    // level l+1 site -> 8 level-l sites
};

/// Builds the rulebook for occupied level-0 voxels of a `resolution`^3 grid.
Rulebook build_rulebook(const std::vector<std::int64_t>& level0_sites, int resolution);

/// Patch-frame voxelisation used by the encoder: the grid spans [-1,1]^2
/// horizontally and [0,2) vertically.
geom::VoxelGrid encoder_grid(const geom::PointCloud& patch, int resolution);

/// Per-point 10-D descriptors: position, rgb, reflectance, offset to the
/// voxel centre (in voxel units).
std::vector<double> point_descriptors(const geom::PointCloud& patch, const geom::VoxelGrid& grid);

class SceneEncoder {
 public:
  struct NormAct {
    std::vector<double> pre;   // conv output
    std::vector<double> xhat;
    std::vector<double> rstd;
    std::vector<double> normed;
    std::vector<double> out;
  };
  struct Cache {
    std::vector<double> descriptors;
    std::vector<double> point_features;
    std::vector<std::int32_t> pool_argmax;  // n0 x w0, winning point per channel
    Rulebook rulebook;
    std::vector<std::vector<double>> level_input;  // V_l
    std::vector<NormAct> subm;
    std::vector<NormAct> down;
  };

  static SceneEncoder create(ParamStore& store, const ModelConfig& cfg);
  void init(ParamStore& store, std::mt19937_64& rng) const;

  /// Scene feature of width cfg.scene_width. Throws DomainError on an empty patch.
  std::vector<double> forward(const ParamStore& store, const geom::PointCloud& patch, Cache& cache) const;
  void backward(ParamStore& store, const Cache& cache, const std::vector<double>& dfeature) const;

 private:
  int resolution_ = 0;
  Linear point_;
  std::vector<SparseConv> subm_;
  std::vector<LayerNorm> subm_norm_;
  std::vector<SparseConv> down_;
  std::vector<LayerNorm> down_norm_;
};

}  // namespace protoscene::model
