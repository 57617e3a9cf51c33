// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <numbers>
#include <optional>

#include <Eigen/Core>

#include "protoscene/geometry/point_cloud.hpp"

namespace protoscene::geom {

/// Allowed parameter ranges for slot transforms.
struct TransformBounds {
  double scale_min = 0.5;
  double scale_max = 2.0;
  double max_tilt = std::numbers::pi / 10.0;
};

/// Slot placement: anisotropic scaling, then a tilt about y, then a rotation
/// about z, then a translation.
///
/// In full-affine mode `linear` replaces the diagonal scaling with an
/// unconstrained 3x3 matrix; the rotations and translation still follow it.
struct AffineTransform {
  Vec3 scale = Vec3::Ones();
  double tilt_y = 0.0;
  double rot_z = 0.0;
  Vec3 translation = Vec3::Zero();
  std::optional<Eigen::Matrix3d> linear;

  static AffineTransform identity() { return {}; }

  /// Rz(rot_z) * Ry(tilt_y) * diag(scale)   (or * linear in full-affine mode)
  Eigen::Matrix3d matrix() const;

  Vec3 apply(const Vec3& p) const { return matrix() * p + translation; }
};

Eigen::Matrix3d rotation_y(double angle);
Eigen::Matrix3d rotation_z(double angle);

/// Throws ParameterError if a parameter is outside `bounds` (scales are only
/// checked when no full-affine matrix is set).
void validate(const AffineTransform& t, const TransformBounds& bounds = {});

/// Maps positions through `t`; every other channel is copied unchanged.
PointCloud apply_transform(const AffineTransform& t, const PointCloud& p,
                           const TransformBounds& bounds = {});

}  // namespace protoscene::geom
