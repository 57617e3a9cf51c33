// SPDX-License-Identifier: Apache-2.0
//
// Square patches cut from a scene and mapped to the patch frame: horizontal
// coordinates to [-1,1]^2, z shifted to the patch minimum and scaled by the
// same factor as x and y.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"

namespace protoscene::train {

/// Minimum number of points for a sampled training patch.
inline constexpr std::size_t kMinPatchPoints = 32;
inline constexpr int kMaxPatchRejections = 100;

struct PatchFrame {
  double center_x = 0.0;
  double center_y = 0.0;
  double z0 = 0.0;
  double half_size = 1.0;

  geom::Vec3 to_patch(const geom::Vec3& p) const {
    return {(p.x() - center_x) / half_size, (p.y() - center_y) / half_size, (p.z() - z0) / half_size};
  }
  geom::Vec3 to_scene(const geom::Vec3& q) const {
    return {q.x() * half_size + center_x, q.y() * half_size + center_y, q.z() * half_size + z0};
  }
};

struct Patch {
  geom::PointCloud cloud;            // patch frame
  PatchFrame frame;
  std::vector<std::size_t> source;   // scene index of every patch point
};

/// Bucket grid over the horizontal plane for fast square crops.
class SceneIndex {
 public:
  SceneIndex(const geom::PointCloud& scene, double cell_size);

  const geom::PointCloud& scene() const { return *scene_; }
  const geom::Bounds3& bounds() const { return bounds_; }

  /// Indices of points with x in [x0, x1) and y in [y0, y1), in increasing order.
  std::vector<std::size_t> crop(double x0, double y0, double x1, double y1) const;

 private:
  const geom::PointCloud* scene_;
  geom::Bounds3 bounds_;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<std::size_t>> cells_;
};

/// Builds a patch from scene points `idx` framed by `frame`. z0 is set to the
/// lowest selected point.
Patch make_patch(const geom::PointCloud& scene, std::vector<std::size_t> idx, double center_x,
                 double center_y, double size_m);

/// Random training patch: uniform centre such that the square lies inside
/// the scene rectangle, rejecting crops with fewer than 32 points, then a
/// uniform subsample to `max_points`. Throws DomainError when the scene is
/// smaller than the patch or after 100 consecutive rejections.
Patch sample_patch(const SceneIndex& index, double size_m, std::size_t max_points, std::mt19937_64& rng);

/// Non-overlapping tiling of the scene rectangle from its minimum corner.
/// Points on the far boundary fall into the last tile; empty tiles are
/// omitted. Every point belongs to exactly one patch.
std::vector<Patch> inference_grid(const geom::PointCloud& scene, double size_m);

/// Tile (column, row) of a point for the tiling above.
std::pair<int, int> tile_of(const geom::Vec3& p, const geom::Bounds3& bounds, double size_m);

}  // namespace protoscene::train
