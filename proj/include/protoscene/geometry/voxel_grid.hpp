// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"

namespace protoscene::geom {

using GridIndex = std::array<int, 3>;

/// Sparse occupancy of a regular grid.
///
/// Voxel ids are `(ix * res_y + iy) * res_z + iz`. `occupied` lists the ids of
/// non-empty voxels in increasing order; `point_voxel[i]` is the id of the
/// voxel holding point i and `point_slot[i]` its position in `occupied`.
struct VoxelGrid {
  GridIndex resolution{64, 64, 64};
  double voxel_size = 1.0;
  Vec3 origin = Vec3::Zero();
  std::vector<std::int64_t> occupied;
  std::vector<std::int64_t> point_voxel;
  std::vector<std::int32_t> point_slot;

  std::int64_t id_of(const GridIndex& g) const {
    return (static_cast<std::int64_t>(g[0]) * resolution[1] + g[1]) * resolution[2] + g[2];
  }
  GridIndex index_of(std::int64_t id) const {
    const int iz = static_cast<int>(id % resolution[2]);
    const std::int64_t rest = id / resolution[2];
    return {static_cast<int>(rest / resolution[1]), static_cast<int>(rest % resolution[1]), iz};
  }
  Vec3 center_of(const GridIndex& g) const {
    return origin + voxel_size * Vec3(g[0] + 0.5, g[1] + 0.5, g[2] + 0.5);
  }
};

/// Grid cell of a point; coordinates outside the grid clamp to the boundary.
GridIndex voxel_index(const Vec3& p, const GridIndex& resolution, double voxel_size,
                      const Vec3& origin);

/// Assigns every point to one voxel. Throws ParameterError on a non-positive
/// voxel size or resolution.
VoxelGrid voxelize(const PointCloud& p, const GridIndex& resolution, double voxel_size,
                   const Vec3& origin);

}  // namespace protoscene::geom
