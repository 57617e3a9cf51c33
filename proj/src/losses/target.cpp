// SPDX-License-Identifier: Apache-2.0

#include "protoscene/losses/target.hpp"

#include "protoscene/errors.hpp"

namespace protoscene::loss {

PatchTarget PatchTarget::from_patch(const geom::PointCloud& patch, bool use_intensity) {
  if (patch.empty()) throw DomainError("loss target: empty patch");
  PatchTarget t;
  t.space = geom::LossSpace::fit(patch, use_intensity && patch.intensity.has_value());
  t.x = t.space.map(patch);
  return t;
}

geom::FeatureCloud map_candidate(const model::CandidateSet& cand, int s, int k,
                                 const geom::LossSpace& space, bool clip,
                                 std::vector<std::uint32_t>* kept) {
  geom::FeatureCloud f;
  f.dim = space.dim();
  const geom::Vec3* pts = cand.cloud(s, k);
  const int P = cand.points_per_prototype;
  f.coords.reserve(static_cast<std::size_t>(P) * f.dim);
  if (kept) kept->clear();
  double buf[4];
  for (int p = 0; p < P; ++p) {
    if (clip && !geom::inside_extent(pts[p])) continue;
    space.map(pts[p], cand.intensity[k], buf);
    f.coords.insert(f.coords.end(), buf, buf + f.dim);
    if (kept) kept->push_back(static_cast<std::uint32_t>(p));
  }
  return f;
}

void add_point_grad(const geom::LossSpace& space, int k, std::size_t point_offset, const double* g,
                    model::CandidateGrad& grad) {
  geom::Vec3& dst = grad.points[point_offset];
  for (int d = 0; d < 3; ++d) dst[d] += g[d] * space.inv_extent[d];
  if (space.with_intensity) grad.intensity[k] += g[3] * geom::kIntensityLossScale;
}

}  // namespace protoscene::loss
