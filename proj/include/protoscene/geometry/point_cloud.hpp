// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace protoscene::geom {

using Vec3 = Eigen::Vector3d;

enum class Frame { kScene, kPatchNormalized };

/// Points plus optional per-point channels. Every channel that is present has
/// exactly one entry per position.
struct PointCloud {
  std::vector<Vec3> positions;
  std::optional<std::vector<double>> intensity;  // in [0,1]
  std::optional<std::vector<Vec3>> color;        // rgb in [0,1]
  std::optional<std::vector<int>> class_label;   // -1 = unlabeled
  std::optional<std::vector<int>> instance_label;  // -1 = none
  Frame frame = Frame::kScene;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  /// Throws FormatError when a channel length disagrees with the positions.
  void validate() const;

  /// New cloud holding the listed points (all channels carried over).
  PointCloud subset(std::span<const std::size_t> indices) const;

  /// Appends one point from another cloud with compatible channels.
  void append_from(const PointCloud& other, std::size_t i);

  void reserve(std::size_t n);
};

/// Row-major cloud of fixed dimensionality (3 or 4) in loss space.
struct FeatureCloud {
  int dim = 3;
  std::vector<double> coords;

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / static_cast<std::size_t>(dim); }
  bool empty() const { return coords.empty(); }
  const double* point(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(dim); }
  double* point(std::size_t i) { return coords.data() + i * static_cast<std::size_t>(dim); }
};

/// Positions of `p` as a 3-D feature cloud.
FeatureCloud positions_only(const PointCloud& p);

struct Bounds3 {
  Vec3 min;
  Vec3 max;
};

/// Axis-aligned bounding box. Throws DomainError on an empty cloud.
Bounds3 bounding_box(const PointCloud& p);

}  // namespace protoscene::geom
