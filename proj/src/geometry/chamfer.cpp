// SPDX-License-Identifier: Apache-2.0

#include "protoscene/geometry/chamfer.hpp"

#include "protoscene/errors.hpp"

namespace protoscene::geom {

double chamfer_asym(const FeatureCloud& x, const FeatureCloud& y, const nn::Backend& backend) {
  if (x.empty()) throw DomainError("chamfer: empty source cloud");
  if (y.empty()) throw DomainError("chamfer: minimum over an empty target cloud is undefined");
  if (x.dim != y.dim) throw ParameterError("chamfer: dimensionality mismatch");
  const nn::NearestResult r = nn::nearest(x.coords, y.coords, x.dim, backend);
  double sum = 0.0;
  for (double d : r.dist) sum += d;
  return sum / static_cast<double>(r.dist.size());
}

double chamfer_sym(const FeatureCloud& x, const FeatureCloud& y, const nn::Backend& backend) {
  return chamfer_asym(x, y, backend) + chamfer_asym(y, x, backend);
}

double chamfer_asym(const PointCloud& x, const PointCloud& y) {
  return chamfer_asym(positions_only(x), positions_only(y));
}

double chamfer_sym(const PointCloud& x, const PointCloud& y) {
  return chamfer_sym(positions_only(x), positions_only(y));
}

}  // namespace protoscene::geom
