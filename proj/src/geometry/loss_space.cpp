// SPDX-License-Identifier: Apache-2.0

#include "protoscene/geometry/loss_space.hpp"

#include <vector>

#include "protoscene/errors.hpp"

namespace protoscene::geom {

LossSpace LossSpace::fit(const PointCloud& x, bool use_intensity) {
  const Bounds3 b = bounding_box(x);
  LossSpace s;
  s.lo = b.min;
  for (int d = 0; d < 3; ++d) {
    const double ext = b.max[d] - b.min[d];
    s.inv_extent[d] = ext > 1e-12 ? 1.0 / ext : 1.0;
  }
  s.with_intensity = use_intensity;
  return s;
}

FeatureCloud LossSpace::map(const PointCloud& p) const {
  if (with_intensity && !p.intensity) throw DomainError("loss space: cloud has no intensity channel");
  FeatureCloud f;
  f.dim = dim();
  f.coords.resize(p.size() * static_cast<std::size_t>(f.dim));
  for (std::size_t i = 0; i < p.size(); ++i) {
    map(p.positions[i], with_intensity ? (*p.intensity)[i] : 0.0, f.point(i));
  }
  return f;
}

FeatureCloud to_loss_space(const PointCloud& p) {
  return LossSpace::fit(p, p.intensity.has_value()).map(p);
}

PointCloud clip_to_extent(const PointCloud& y) {
  std::vector<std::size_t> keep;
  keep.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (inside_extent(y.positions[i])) keep.push_back(i);
  }
  return y.subset(keep);
}

}  // namespace protoscene::geom
