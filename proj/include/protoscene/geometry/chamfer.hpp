// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "protoscene/geometry/point_cloud.hpp"
#include "protoscene/nn/backend.hpp"

namespace protoscene::geom {

/// Mean over `x` of the squared distance to the nearest point of `y`.
/// Throws DomainError if either cloud is empty, ParameterError on a
/// dimensionality mismatch.
double chamfer_asym(const FeatureCloud& x, const FeatureCloud& y,
                    const nn::Backend& backend = nn::default_backend());

/// chamfer_asym(x, y) + chamfer_asym(y, x)
double chamfer_sym(const FeatureCloud& x, const FeatureCloud& y,
                   const nn::Backend& backend = nn::default_backend());

/// Position-only variants.
double chamfer_asym(const PointCloud& x, const PointCloud& y);
double chamfer_sym(const PointCloud& x, const PointCloud& y);

}  // namespace protoscene::geom
