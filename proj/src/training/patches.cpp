// SPDX-License-Identifier: Apache-2.0

#include "protoscene/training/patches.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "protoscene/errors.hpp"

namespace protoscene::train {

SceneIndex::SceneIndex(const geom::PointCloud& scene, double cell_size)
    : scene_(&scene), bounds_(geom::bounding_box(scene)), cell_(cell_size) {
  if (!(cell_size > 0.0)) throw ParameterError("scene index: cell size must be positive");
  nx_ = std::max(1, static_cast<int>(std::ceil((bounds_.max.x() - bounds_.min.x()) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((bounds_.max.y() - bounds_.min.y()) / cell_)));
  cells_.resize(static_cast<std::size_t>(nx_) * ny_);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& p = scene.positions[i];
    const int cx = std::clamp(static_cast<int>((p.x() - bounds_.min.x()) / cell_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((p.y() - bounds_.min.y()) / cell_), 0, ny_ - 1);
    cells_[static_cast<std::size_t>(cx) * ny_ + cy].push_back(i);
  }
}

std::vector<std::size_t> SceneIndex::crop(double x0, double y0, double x1, double y1) const {
  const int cx0 = std::clamp(static_cast<int>(std::floor((x0 - bounds_.min.x()) / cell_)), 0, nx_ - 1);
  const int cx1 = std::clamp(static_cast<int>(std::floor((x1 - bounds_.min.x()) / cell_)), 0, nx_ - 1);
  const int cy0 = std::clamp(static_cast<int>(std::floor((y0 - bounds_.min.y()) / cell_)), 0, ny_ - 1);
  const int cy1 = std::clamp(static_cast<int>(std::floor((y1 - bounds_.min.y()) / cell_)), 0, ny_ - 1);
  std::vector<std::size_t> out;
  for (int cx = cx0; cx <= cx1; ++cx) {
    for (int cy = cy0; cy <= cy1; ++cy) {
      for (std::size_t i : cells_[static_cast<std::size_t>(cx) * ny_ + cy]) {
        const auto& p = scene_->positions[i];
        if (p.x() >= x0 && p.x() < x1 && p.y() >= y0 && p.y() < y1) out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Patch make_patch(const geom::PointCloud& scene, std::vector<std::size_t> idx, double center_x,
                 double center_y, double size_m) {
  Patch patch;
  patch.frame.center_x = center_x;
  patch.frame.center_y = center_y;
  patch.frame.half_size = size_m / 2.0;
  double z0 = std::numeric_limits<double>::infinity();
  for (std::size_t i : idx) z0 = std::min(z0, scene.positions[i].z());
  patch.frame.z0 = idx.empty() ? 0.0 : z0;
  patch.cloud = scene.subset(idx);
  for (auto& p : patch.cloud.positions) p = patch.frame.to_patch(p);
  patch.cloud.frame = geom::Frame::kPatchNormalized;
  patch.source = std::move(idx);
  return patch;
}

Patch sample_patch(const SceneIndex& index, double size_m, std::size_t max_points, std::mt19937_64& rng) {
  if (!(size_m > 0.0)) throw ParameterError("patch size must be positive");
  const auto& b = index.bounds();
  const double ex = b.max.x() - b.min.x();
  const double ey = b.max.y() - b.min.y();
  if (ex < size_m || ey < size_m) {
    throw DomainError("scene (" + std::to_string(ex) + " x " + std::to_string(ey) +
                      " m) is smaller than the patch size " + std::to_string(size_m) + " m");
  }
  const double h = size_m / 2.0;
  std::uniform_real_distribution<double> ux(b.min.x() + h, b.max.x() - h);
  std::uniform_real_distribution<double> uy(b.min.y() + h, b.max.y() - h);
  for (int attempt = 0; attempt < kMaxPatchRejections; ++attempt) {
    const double cx = ex == size_m ? b.min.x() + h : ux(rng);
    const double cy = ey == size_m ? b.min.y() + h : uy(rng);
    std::vector<std::size_t> idx = index.crop(cx - h, cy - h, cx + h, cy + h);
    if (idx.size() < kMinPatchPoints) continue;
    if (idx.size() > max_points) {
      std::vector<std::size_t> keep;
      keep.reserve(max_points);
      std::sample(idx.begin(), idx.end(), std::back_inserter(keep), max_points, rng);
      idx = std::move(keep);
    }
    return make_patch(index.scene(), std::move(idx), cx, cy, size_m);
  }
  throw DomainError("no patch with at least 32 points after 100 attempts");
}

std::pair<int, int> tile_of(const geom::Vec3& p, const geom::Bounds3& b, double size_m) {
  const int nx = std::max(1, static_cast<int>(std::ceil((b.max.x() - b.min.x()) / size_m)));
  const int ny = std::max(1, static_cast<int>(std::ceil((b.max.y() - b.min.y()) / size_m)));
  const int ix = std::clamp(static_cast<int>(std::floor((p.x() - b.min.x()) / size_m)), 0, nx - 1);
  const int iy = std::clamp(static_cast<int>(std::floor((p.y() - b.min.y()) / size_m)), 0, ny - 1);
  return {ix, iy};
}

std::vector<Patch> inference_grid(const geom::PointCloud& scene, double size_m) {
  if (!(size_m > 0.0)) throw ParameterError("patch size must be positive");
  if (scene.empty()) return {};
  const geom::Bounds3 b = geom::bounding_box(scene);
  const int nx = std::max(1, static_cast<int>(std::ceil((b.max.x() - b.min.x()) / size_m)));
  const int ny = std::max(1, static_cast<int>(std::ceil((b.max.y() - b.min.y()) / size_m)));
  std::vector<std::vector<std::size_t>> tiles(static_cast<std::size_t>(nx) * ny);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto [ix, iy] = tile_of(scene.positions[i], b, size_m);
    tiles[static_cast<std::size_t>(ix) * ny + iy].push_back(i);
  }
  std::vector<Patch> out;
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      auto& idx = tiles[static_cast<std::size_t>(ix) * ny + iy];
      if (idx.empty()) continue;
      out.push_back(make_patch(scene, std::move(idx), b.min.x() + (ix + 0.5) * size_m,
                               b.min.y() + (iy + 0.5) * size_m, size_m));
    }
  }
  return out;
}

}  // namespace protoscene::train
