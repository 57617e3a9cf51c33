// SPDX-License-Identifier: Apache-2.0

#include "protoscene/geometry/transform.hpp"

#include <cmath>
#include <string>

#include "protoscene/errors.hpp"

namespace protoscene::geom {

Eigen::Matrix3d rotation_y(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return r;
}

Eigen::Matrix3d rotation_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Eigen::Matrix3d AffineTransform::matrix() const {
  const Eigen::Matrix3d rot = rotation_z(rot_z) * rotation_y(tilt_y);
  if (linear) return rot * (*linear);
  return rot * scale.asDiagonal();
}

void validate(const AffineTransform& t, const TransformBounds& bounds) {
  auto fail = [](const std::string& what) { throw ParameterError("transform: " + what); };
  if (!t.linear) {
    for (int i = 0; i < 3; ++i) {
      if (!(t.scale[i] >= bounds.scale_min && t.scale[i] <= bounds.scale_max)) {
        fail("scale " + std::to_string(t.scale[i]) + " outside [" +
             std::to_string(bounds.scale_min) + ", " + std::to_string(bounds.scale_max) + "]");
      }
    }
  } else if (!t.linear->allFinite()) {
    fail("non-finite affine matrix");
  }
  if (!(std::abs(t.tilt_y) <= bounds.max_tilt)) fail("tilt_y out of range");
  if (!(std::abs(t.rot_z) <= std::numbers::pi)) fail("rot_z out of range");
  if (!t.translation.allFinite()) fail("non-finite translation");
}

PointCloud apply_transform(const AffineTransform& t, const PointCloud& p,
                           const TransformBounds& bounds) {
  validate(t, bounds);
  PointCloud out = p;
  const Eigen::Matrix3d m = t.matrix();
  for (Vec3& v : out.positions) v = m * v + t.translation;
  return out;
}

}  // namespace protoscene::geom
