// SPDX-License-Identifier: Apache-2.0

#include "protoscene/geometry/voxel_grid.hpp"

#include <algorithm>
#include <cmath>

#include "protoscene/errors.hpp"

namespace protoscene::geom {

GridIndex voxel_index(const Vec3& p, const GridIndex& resolution, double voxel_size,
                      const Vec3& origin) {
  GridIndex g{};
  for (int d = 0; d < 3; ++d) {
    const double f = std::floor((p[d] - origin[d]) / voxel_size);
    const double clamped = std::clamp(f, 0.0, static_cast<double>(resolution[d] - 1));
    g[d] = static_cast<int>(clamped);
  }
  return g;
}

VoxelGrid voxelize(const PointCloud& p, const GridIndex& resolution, double voxel_size,
                   const Vec3& origin) {
  if (!(voxel_size > 0.0)) throw ParameterError("voxelize: voxel size must be positive");
  for (int r : resolution) {
    if (r <= 0) throw ParameterError("voxelize: resolution must be positive");
  }
  VoxelGrid grid;
  grid.resolution = resolution;
  grid.voxel_size = voxel_size;
  grid.origin = origin;
  grid.point_voxel.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    grid.point_voxel[i] = grid.id_of(voxel_index(p.positions[i], resolution, voxel_size, origin));
  }
  grid.occupied = grid.point_voxel;
  std::sort(grid.occupied.begin(), grid.occupied.end());
  grid.occupied.erase(std::unique(grid.occupied.begin(), grid.occupied.end()), grid.occupied.end());
  grid.point_slot.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto it = std::lower_bound(grid.occupied.begin(), grid.occupied.end(), grid.point_voxel[i]);
    grid.point_slot[i] = static_cast<std::int32_t>(it - grid.occupied.begin());
  }
  return grid;
}

}  // namespace protoscene::geom
