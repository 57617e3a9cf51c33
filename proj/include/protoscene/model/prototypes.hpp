// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"
#include "protoscene/model/config.hpp"

namespace protoscene::model {

/// K learnable prototype point clouds with per-prototype intensity and
/// log-scales. The effective prototype k is
/// `points[k] * exp(base_scale[k]) * exp(aniso_scale[k])` (component-wise).
struct PrototypeBank {
  int count = 0;
  int points_per_prototype = 0;
  std::vector<geom::Vec3> points;       // count * points_per_prototype
  std::vector<double> intensity;        // count
  std::vector<double> base_scale;       // count, log-scale
  std::vector<geom::Vec3> aniso_scale;  // count, per-axis log-scale

  const geom::Vec3& point(int k, int p) const {
    return points[static_cast<std::size_t>(k) * points_per_prototype + p];
  }
  geom::Vec3& point(int k, int p) { return points[static_cast<std::size_t>(k) * points_per_prototype + p]; }

  /// Per-axis multiplier exp(base) * exp(aniso).
  geom::Vec3 multiplier(int k) const;

  /// Prototype k with its scales applied, in the canonical frame.
  geom::PointCloud scaled_cloud(int k) const;
};

/// Gradient with the same layout as PrototypeBank.
struct PrototypeBankGrad {
  std::vector<geom::Vec3> points;
  std::vector<double> intensity;
  std::vector<double> base_scale;
  std::vector<geom::Vec3> aniso_scale;

  explicit PrototypeBankGrad(const PrototypeBank& shape_of);
  PrototypeBankGrad() = default;
};

/// Axis-aligned initialisation cuboid of one prototype (centred at origin).
struct InitCuboid {
  geom::Vec3 half_extent;
};

/// Uniform samples in a random cuboid per prototype; intensities 0.5, scales
/// identity. Deterministic in `seed`. `cuboids`, when given, receives the
/// cuboid of each prototype.
PrototypeBank init_prototypes(const ModelConfig& config, std::uint64_t seed,
                              std::vector<InitCuboid>* cuboids = nullptr);

}  // namespace protoscene::model
