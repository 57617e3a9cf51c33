// SPDX-License-Identifier: Apache-2.0

#include "protoscene/model/prototypes.hpp"

#include <cmath>
#include <random>

namespace protoscene::model {

geom::Vec3 PrototypeBank::multiplier(int k) const {
  const double b = std::exp(base_scale[k]);
  const geom::Vec3& a = aniso_scale[k];
  return {b * std::exp(a.x()), b * std::exp(a.y()), b * std::exp(a.z())};
}

geom::PointCloud PrototypeBank::scaled_cloud(int k) const {
  geom::PointCloud c;
  const geom::Vec3 m = multiplier(k);
  c.positions.reserve(points_per_prototype);
  for (int p = 0; p < points_per_prototype; ++p) c.positions.push_back(point(k, p).cwiseProduct(m));
  c.intensity = std::vector<double>(points_per_prototype, intensity[k]);
  return c;
}

PrototypeBankGrad::PrototypeBankGrad(const PrototypeBank& b)
    : points(b.points.size(), geom::Vec3::Zero()),
      intensity(b.count, 0.0),
      base_scale(b.count, 0.0),
      aniso_scale(b.count, geom::Vec3::Zero()) {}

PrototypeBank init_prototypes(const ModelConfig& config, std::uint64_t seed,
                              std::vector<InitCuboid>* cuboids) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> extent(config.init_half_extent_min,
                                                config.init_half_extent_max);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  PrototypeBank bank;
  bank.count = config.prototypes;
  bank.points_per_prototype = config.points_per_prototype;
  bank.points.reserve(static_cast<std::size_t>(bank.count) * bank.points_per_prototype);
  bank.intensity.assign(bank.count, 0.5);
  bank.base_scale.assign(bank.count, 0.0);
  bank.aniso_scale.assign(bank.count, geom::Vec3::Zero());
  if (cuboids) cuboids->clear();

  for (int k = 0; k < bank.count; ++k) {
    const geom::Vec3 half(extent(rng), extent(rng), extent(rng));
    if (cuboids) cuboids->push_back({half});
    for (int p = 0; p < bank.points_per_prototype; ++p) {
      const double x = unit(rng);
      const double y = unit(rng);
      const double z = unit(rng);
      bank.points.emplace_back(x * half.x(), y * half.y(), z * half.z());
    }
  }
  return bank;
}

}  // namespace protoscene::model
