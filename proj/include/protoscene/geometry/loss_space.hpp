// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "protoscene/geometry/point_cloud.hpp"

namespace protoscene::geom {

/// Intensity in [0,1] becomes a fourth loss-space coordinate in [0, 0.1].
inline constexpr double kIntensityLossScale = 0.1;

/// Per-axis affine map taking a patch's bounding box onto [0,1]^3, optionally
/// with intensity appended as a fourth coordinate.
///
/// The box is always fitted on the input patch; reconstructions are mapped
/// with the same box and may leave [0,1]^3.
struct LossSpace {
  Vec3 lo = Vec3::Zero();
  Vec3 inv_extent = Vec3::Ones();
  bool with_intensity = false;

  int dim() const { return with_intensity ? 4 : 3; }

  /// Axes whose extent is (numerically) zero keep unit scale.
  static LossSpace fit(const PointCloud& x, bool use_intensity);

  void map(const Vec3& p, double intensity, double* out) const {
    for (int d = 0; d < 3; ++d) out[d] = (p[d] - lo[d]) * inv_extent[d];
    if (with_intensity) out[3] = intensity * kIntensityLossScale;
  }

  /// Throws DomainError if intensity is required but absent.
  FeatureCloud map(const PointCloud& p) const;
};

/// Loss-space image of a patch using its own bounding box. Falls back to
/// three dimensions when the cloud carries no intensity.
FeatureCloud to_loss_space(const PointCloud& p);

/// True when the horizontal coordinates lie in the closed square [-1,1]^2.
inline bool inside_extent(const Vec3& p) {
  return p.x() >= -1.0 && p.x() <= 1.0 && p.y() >= -1.0 && p.y() <= 1.0;
}

/// Points whose horizontal coordinates lie in [-1,1]^2; z is unconstrained.
PointCloud clip_to_extent(const PointCloud& y);

}  // namespace protoscene::geom
