// SPDX-License-Identifier: Apache-2.0
//
// Synthetic scenes: a rough terrain lattice with labelled objects planted on it.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"

namespace protoscene::io {

enum class Shape { kCone, kBox, kCylinder, kComposite };

std::string shape_name(Shape s);
/// Throws ParameterError on an unknown name.
Shape parse_shape(std::string_view name);

struct Archetype {
  Shape shape = Shape::kCone;
  int count_min = 1;
  int count_max = 1;
  double scale_min = 1.0;
  double scale_max = 1.0;
  double width_m = 4.0;   // base diameter, or box side along x
  double depth_m = 0.0;   // box side along y; 0 means width_m
  double height_m = 6.0;
  double intensity = 0.5;
  int class_id = 1;

  double depth() const { return depth_m > 0.0 ? depth_m : width_m; }
  /// Radius of the circle enclosing the footprint at scale 1.
  double footprint_radius() const;
};

struct SynthSpec {
  double extent_m = 80.0;
  double roughness_m = 0.5;       // terrain relief amplitude
  double ground_density = 5.0;    // points per square metre
  double object_density = 7.0;    // points per square metre of object surface
  double noise_m = 0.02;
  double intensity_noise = 0.02;
  /// Footprint circles may interpenetrate by at most this much.
  double overlap_tolerance_m = 0.0;
  int ground_class = 0;
  double ground_intensity = 0.2;
  std::uint64_t seed = 0;
  std::vector<Archetype> archetypes;

  /// Throws ParameterError.
  void validate() const;
};

struct PlantedObject {
  int archetype = 0;
  int instance = 0;
  geom::Vec3 base;  // footprint centre at terrain height
  double yaw = 0.0;
  double scale = 1.0;
};

struct SynthScene {
  geom::PointCloud cloud;
  std::vector<PlantedObject> objects;
};

/// Maximum placement attempts per object before giving up.
inline constexpr int kMaxPlacementAttempts = 1000;

/// Deterministic per seed. Ground carries instance 0, objects 1..n in
/// placement order. Throws DomainError when an object cannot be placed.
SynthScene generate_synthetic(const SynthSpec& spec);
geom::PointCloud generate_synthetic_scene(const SynthSpec& spec);

/// Terrain height of the scene built from `spec`.
double terrain_height(const SynthSpec& spec, double x, double y);

/// `n` points uniformly on the visible surface of an archetype instance,
/// in its local frame (footprint centre at the origin, z up, unrotated).
std::vector<geom::Vec3> sample_surface(const Archetype& a, double scale, std::size_t n, std::mt19937_64& rng);

/// Surface area used to size the point budget of one instance.
double surface_area(const Archetype& a, double scale);

/// Cones (vegetation, class 1) and boxes (building, class 2) on rough ground.
SynthSpec default_spec();

/// Reads the sectioned key = value form: one [scene] section and one
/// [archetype] (or [[archetype]]) section per archetype. Throws FormatError.
SynthSpec parse_synth_spec(std::string_view text);
std::string serialize_synth_spec(const SynthSpec& spec);

}  // namespace protoscene::io
