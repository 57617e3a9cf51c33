// SPDX-License-Identifier: Apache-2.0

#include "protoscene/io/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "protoscene/errors.hpp"
#include "protoscene/io/config_file.hpp"

namespace protoscene::io {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kTerrainWaves = 3;
constexpr std::uint64_t kTerrainSalt = 0x9e3779b97f4a7c15ULL;

struct Wave {
  double kx, ky, phase;
};

std::vector<Wave> terrain_waves(const SynthSpec& spec) {
  std::mt19937_64 rng(spec.seed ^ kTerrainSalt);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> wavelength(0.25, 0.6);
  std::vector<Wave> w;
  for (int i = 0; i < kTerrainWaves; ++i) {
    const double dir = angle(rng);
    const double k = 2.0 * kPi / (wavelength(rng) * spec.extent_m);
    w.push_back({k * std::cos(dir), k * std::sin(dir), angle(rng)});
  }
  return w;
}

double height_from(const std::vector<Wave>& waves, double amplitude, double x, double y) {
  double z = 0.0;
  for (const Wave& w : waves) z += std::sin(w.kx * x + w.ky * y + w.phase);
  return amplitude * z / static_cast<double>(waves.size());
}

geom::Vec3 on_disk(double r, double z, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rho = r * std::sqrt(u(rng));
  const double t = 2.0 * kPi * u(rng);
  return {rho * std::cos(t), rho * std::sin(t), z};
}

geom::Vec3 on_cone(double r, double z0, double h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f = std::sqrt(u(rng));  // distance from apex, area-uniform
  const double t = 2.0 * kPi * u(rng);
  return {r * f * std::cos(t), r * f * std::sin(t), z0 + h * (1.0 - f)};
}

geom::Vec3 on_tube(double r, double z0, double h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double t = 2.0 * kPi * u(rng);
  return {r * std::cos(t), r * std::sin(t), z0 + h * u(rng)};
}

double cone_area(double r, double h) { return kPi * r * std::sqrt(r * r + h * h); }

struct CompositeDims {
  double trunk_r, trunk_h, crown_r, crown_z, crown_h;
};

CompositeDims composite_dims(const Archetype& a, double s) {
  const double w = a.width_m * s;
  const double h = a.height_m * s;
  return {0.08 * w, 0.4 * h, 0.5 * w, 0.3 * h, 0.7 * h};
}

bool inside_footprint(const Archetype& a, const PlantedObject& o, double x, double y) {
  const double dx = x - o.base.x();
  const double dy = y - o.base.y();
  if (a.shape == Shape::kBox) {
    const double c = std::cos(o.yaw), s = std::sin(o.yaw);
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    return std::abs(lx) <= 0.5 * a.width_m * o.scale && std::abs(ly) <= 0.5 * a.depth() * o.scale;
  }
  const double r = 0.5 * a.width_m * o.scale;
  return dx * dx + dy * dy <= r * r;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

double to_double(const KeyValue& kv) {
  const std::string v = unquote(kv.value);
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') {
    throw FormatError("line " + std::to_string(kv.line) + ": " + kv.key + ": expected a number, got '" + v + "'");
  }
  return d;
}

int to_int(const KeyValue& kv) {
  const double d = to_double(kv);
  if (d != std::floor(d)) throw FormatError("line " + std::to_string(kv.line) + ": " + kv.key + ": expected an integer");
  return static_cast<int>(d);
}

std::uint64_t to_seed(const KeyValue& kv) {
  const std::string v = unquote(kv.value);
  char* end = nullptr;
  const unsigned long long d = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v.front() == '-' || *end != '\0') {
    throw FormatError("line " + std::to_string(kv.line) + ": seed: expected a non-negative integer");
  }
  return d;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string shape_name(Shape s) {
  switch (s) {
    case Shape::kCone: return "cone";
    case Shape::kBox: return "box";
    case Shape::kCylinder: return "cylinder";
    case Shape::kComposite: return "composite";
  }
  return "cone";
}

Shape parse_shape(std::string_view name) {
  for (Shape s : {Shape::kCone, Shape::kBox, Shape::kCylinder, Shape::kComposite}) {
    if (shape_name(s) == name) return s;
  }
  throw ParameterError("unknown shape '" + std::string(name) + "' (cone, box, cylinder, composite)");
}

double Archetype::footprint_radius() const {
  if (shape == Shape::kBox) return 0.5 * std::hypot(width_m, depth());
  return 0.5 * width_m;
}

void SynthSpec::validate() const {
  if (!(extent_m > 0.0)) throw ParameterError("extent_m must be positive");
  if (roughness_m < 0.0 || noise_m < 0.0 || intensity_noise < 0.0) throw ParameterError("noise amplitudes must be non-negative");
  if (!(ground_density > 0.0) || !(object_density > 0.0)) throw ParameterError("densities must be positive");
  if (overlap_tolerance_m < 0.0) throw ParameterError("overlap_tolerance_m must be non-negative");
  if (ground_intensity < 0.0 || ground_intensity > 1.0) throw ParameterError("ground_intensity must lie in [0,1]");
  for (const Archetype& a : archetypes) {
    if (a.count_min < 0 || a.count_max < a.count_min) throw ParameterError("archetype count range is invalid");
    if (!(a.scale_min > 0.0) || a.scale_max < a.scale_min) throw ParameterError("archetype scale range is invalid");
    if (!(a.width_m > 0.0) || !(a.height_m > 0.0) || a.depth_m < 0.0) throw ParameterError("archetype dimensions must be positive");
    if (a.intensity < 0.0 || a.intensity > 1.0) throw ParameterError("archetype intensity must lie in [0,1]");
    if (a.class_id < 0) throw ParameterError("archetype class must be non-negative");
    if (2.0 * a.footprint_radius() * a.scale_max >= extent_m) throw ParameterError("archetype does not fit in the scene");
  }
}

double terrain_height(const SynthSpec& spec, double x, double y) {
  return height_from(terrain_waves(spec), spec.roughness_m, x, y);
}

double surface_area(const Archetype& a, double s) {
  const double w = a.width_m * s;
  const double h = a.height_m * s;
  switch (a.shape) {
    case Shape::kCone: return cone_area(0.5 * w, h);
    case Shape::kBox: {
      const double d = a.depth() * s;
      return w * d + 2.0 * (w + d) * h;
    }
    case Shape::kCylinder: return 2.0 * kPi * 0.5 * w * h + kPi * 0.25 * w * w;
    case Shape::kComposite: {
      const CompositeDims c = composite_dims(a, s);
      return 2.0 * kPi * c.trunk_r * c.trunk_h + cone_area(c.crown_r, c.crown_h) + kPi * c.crown_r * c.crown_r;
    }
  }
  return 0.0;
}

std::vector<geom::Vec3> sample_surface(const Archetype& a, double s, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<geom::Vec3> out;
  out.reserve(n);
  const double w = a.width_m * s;
  const double h = a.height_m * s;
  for (std::size_t i = 0; i < n; ++i) {
    switch (a.shape) {
      case Shape::kCone: out.push_back(on_cone(0.5 * w, 0.0, h, rng)); break;
      case Shape::kCylinder: {
        const double side = kPi * w * h;
        const double top = kPi * 0.25 * w * w;
        out.push_back(u(rng) * (side + top) < side ? on_tube(0.5 * w, 0.0, h, rng) : on_disk(0.5 * w, h, rng));
        break;
      }
      case Shape::kBox: {
        const double d = a.depth() * s;
        const double areas[3] = {w * d, 2.0 * w * h, 2.0 * d * h};
        const double pick = u(rng) * (areas[0] + areas[1] + areas[2]);
        const double px = (u(rng) - 0.5) * w;
        const double py = (u(rng) - 0.5) * d;
        const double pz = u(rng) * h;
        const double side = u(rng) < 0.5 ? -0.5 : 0.5;
        if (pick < areas[0]) {
          out.emplace_back(px, py, h);
        } else if (pick < areas[0] + areas[1]) {
          out.emplace_back(px, side * d, pz);
        } else {
          out.emplace_back(side * w, py, pz);
        }
        break;
      }
      case Shape::kComposite: {
        const CompositeDims c = composite_dims(a, s);
        const double trunk = 2.0 * kPi * c.trunk_r * c.trunk_h;
        const double crown = cone_area(c.crown_r, c.crown_h);
        const double under = kPi * c.crown_r * c.crown_r;
        const double pick = u(rng) * (trunk + crown + under);
        if (pick < trunk) {
          out.push_back(on_tube(c.trunk_r, 0.0, c.trunk_h, rng));
        } else if (pick < trunk + crown) {
          out.push_back(on_cone(c.crown_r, c.crown_z, c.crown_h, rng));
        } else {
          out.push_back(on_disk(c.crown_r, c.crown_z, rng));
        }
        break;
      }
    }
  }
  return out;
}

SynthScene generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const auto waves = terrain_waves(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SynthScene scene;
  int next_instance = 1;
  for (std::size_t ai = 0; ai < spec.archetypes.size(); ++ai) {
    const Archetype& a = spec.archetypes[ai];
    const int count = std::uniform_int_distribution<int>(a.count_min, a.count_max)(rng);
    for (int c = 0; c < count; ++c) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
        const double s = a.scale_min + (a.scale_max - a.scale_min) * unit(rng);
        const double r = a.footprint_radius() * s;
        const double x = r + (spec.extent_m - 2.0 * r) * unit(rng);
        const double y = r + (spec.extent_m - 2.0 * r) * unit(rng);
        const double yaw = a.shape == Shape::kBox ? 0.5 * kPi * unit(rng) : 0.0;
        bool clear = true;
        for (const PlantedObject& o : scene.objects) {
          const double ro = spec.archetypes[static_cast<std::size_t>(o.archetype)].footprint_radius() * o.scale;
          if (std::hypot(x - o.base.x(), y - o.base.y()) < r + ro - spec.overlap_tolerance_m) {
            clear = false;
            break;
          }
        }
        if (!clear) continue;
        scene.objects.push_back({static_cast<int>(ai), next_instance++,
                                 geom::Vec3(x, y, height_from(waves, spec.roughness_m, x, y)), yaw, s});
        placed = true;
      }
      if (!placed) {
        throw DomainError("cannot place " + shape_name(a.shape) + " #" + std::to_string(c + 1) + " after " +
                          std::to_string(kMaxPlacementAttempts) + " attempts");
      }
    }
  }

  geom::PointCloud& pc = scene.cloud;
  pc.intensity = std::vector<double>{};
  pc.class_label = std::vector<int>{};
  pc.instance_label = std::vector<int>{};
  auto push = [&](const geom::Vec3& p, double intensity, int cls, int inst) {
    pc.positions.push_back(p);
    pc.intensity->push_back(std::clamp(intensity + spec.intensity_noise * gauss(rng), 0.0, 1.0));
    pc.class_label->push_back(cls);
    pc.instance_label->push_back(inst);
  };

  const double spacing = 1.0 / std::sqrt(spec.ground_density);
  const int cells = std::max(1, static_cast<int>(std::ceil(spec.extent_m / spacing)));
  const double step = spec.extent_m / cells;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const double x = (i + unit(rng)) * step;
      const double y = (j + unit(rng)) * step;
      bool covered = false;
      for (const PlantedObject& o : scene.objects) {
        if (inside_footprint(spec.archetypes[static_cast<std::size_t>(o.archetype)], o, x, y)) {
          covered = true;
          break;
        }
      }
      if (covered) continue;
      const double z = height_from(waves, spec.roughness_m, x, y) + spec.noise_m * gauss(rng);
      push({x, y, z}, spec.ground_intensity, spec.ground_class, 0);
    }
  }

  for (const PlantedObject& o : scene.objects) {
    const Archetype& a = spec.archetypes[static_cast<std::size_t>(o.archetype)];
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(surface_area(a, o.scale) * spec.object_density)));
    const double c = std::cos(o.yaw), s = std::sin(o.yaw);
    for (const geom::Vec3& q : sample_surface(a, o.scale, n, rng)) {
      const geom::Vec3 p(o.base.x() + c * q.x() - s * q.y() + spec.noise_m * gauss(rng),
                         o.base.y() + s * q.x() + c * q.y() + spec.noise_m * gauss(rng),
                         o.base.z() + q.z() + spec.noise_m * gauss(rng));
      push(p, a.intensity, a.class_id, o.instance);
    }
  }
  return scene;
}

geom::PointCloud generate_synthetic_scene(const SynthSpec& spec) { return generate_synthetic(spec).cloud; }

SynthSpec default_spec() {
  SynthSpec s;
  Archetype cone;
  cone.shape = Shape::kCone;
  cone.count_min = cone.count_max = 24;
  cone.scale_min = 0.85;
  cone.scale_max = 1.15;
  cone.width_m = 4.0;
  cone.height_m = 6.0;
  cone.intensity = 0.6;
  cone.class_id = 1;
  Archetype box;
  box.shape = Shape::kBox;
  box.count_min = box.count_max = 6;
  box.scale_min = 0.9;
  box.scale_max = 1.1;
  box.width_m = 10.0;
  box.depth_m = 8.0;
  box.height_m = 5.0;
  box.intensity = 0.9;
  box.class_id = 2;
  s.archetypes = {cone, box};
  s.overlap_tolerance_m = 0.0;
  return s;
}

SynthSpec parse_synth_spec(std::string_view text) {
  SynthSpec spec;
  for (const Section& sec : parse_sections(text)) {
    std::string name = sec.name;
    while (!name.empty() && name.front() == '[' && name.back() == ']') name = name.substr(1, name.size() - 2);
    const std::string where = "line " + std::to_string(sec.line) + ": ";
    if (name == "scene" || name.empty()) {
      for (const KeyValue& kv : sec.entries) {
        if (kv.key == "extent_m") spec.extent_m = to_double(kv);
        else if (kv.key == "roughness_m") spec.roughness_m = to_double(kv);
        else if (kv.key == "ground_density") spec.ground_density = to_double(kv);
        else if (kv.key == "object_density") spec.object_density = to_double(kv);
        else if (kv.key == "noise_m") spec.noise_m = to_double(kv);
        else if (kv.key == "intensity_noise") spec.intensity_noise = to_double(kv);
        else if (kv.key == "overlap_tolerance_m") spec.overlap_tolerance_m = to_double(kv);
        else if (kv.key == "ground_class") spec.ground_class = to_int(kv);
        else if (kv.key == "ground_intensity") spec.ground_intensity = to_double(kv);
        else if (kv.key == "seed") spec.seed = to_seed(kv);
        else throw FormatError("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "' in [scene]");
      }
    } else if (name == "archetype") {
      Archetype a;
      for (const KeyValue& kv : sec.entries) {
        if (kv.key == "shape") {
          try {
            a.shape = parse_shape(unquote(kv.value));
          } catch (const ParameterError& e) {
            throw FormatError("line " + std::to_string(kv.line) + ": " + e.what());
          }
        } else if (kv.key == "count") a.count_min = a.count_max = to_int(kv);
        else if (kv.key == "count_min") a.count_min = to_int(kv);
        else if (kv.key == "count_max") a.count_max = to_int(kv);
        else if (kv.key == "scale_min") a.scale_min = to_double(kv);
        else if (kv.key == "scale_max") a.scale_max = to_double(kv);
        else if (kv.key == "width_m") a.width_m = to_double(kv);
        else if (kv.key == "depth_m") a.depth_m = to_double(kv);
        else if (kv.key == "height_m") a.height_m = to_double(kv);
        else if (kv.key == "intensity") a.intensity = to_double(kv);
        else if (kv.key == "class") a.class_id = to_int(kv);
        else throw FormatError("line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "' in [archetype]");
      }
      spec.archetypes.push_back(a);
    } else {
      throw FormatError(where + "unknown section [" + sec.name + "]");
    }
  }
  try {
    spec.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("invalid synthetic scene spec: ") + e.what());
  }
  return spec;
}

std::string serialize_synth_spec(const SynthSpec& s) {
  std::ostringstream os;
  os << "[scene]\n"
     << "extent_m = " << fmt(s.extent_m) << "\n"
     << "roughness_m = " << fmt(s.roughness_m) << "\n"
     << "ground_density = " << fmt(s.ground_density) << "\n"
     << "object_density = " << fmt(s.object_density) << "\n"
     << "noise_m = " << fmt(s.noise_m) << "\n"
     << "intensity_noise = " << fmt(s.intensity_noise) << "\n"
     << "overlap_tolerance_m = " << fmt(s.overlap_tolerance_m) << "\n"
     << "ground_class = " << s.ground_class << "\n"
     << "ground_intensity = " << fmt(s.ground_intensity) << "\n"
     << "seed = " << s.seed << "\n";
  for (const Archetype& a : s.archetypes) {
    os << "\n[[archetype]]\n"
       << "shape = " << shape_name(a.shape) << "\n"
       << "count_min = " << a.count_min << "\n"
       << "count_max = " << a.count_max << "\n"
       << "scale_min = " << fmt(a.scale_min) << "\n"
       << "scale_max = " << fmt(a.scale_max) << "\n"
       << "width_m = " << fmt(a.width_m) << "\n"
       << "depth_m = " << fmt(a.depth_m) << "\n"
       << "height_m = " << fmt(a.height_m) << "\n"
       << "intensity = " << fmt(a.intensity) << "\n"
       << "class = " << a.class_id << "\n";
  }
  return os.str();
}

}  // namespace protoscene::io
