// SPDX-License-Identifier: Apache-2.0

#include "protoscene/io/export.hpp"

#include "protoscene/errors.hpp"
#include "protoscene/io/file_util.hpp"
#include "protoscene/io/ply.hpp"

namespace protoscene::io {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void add_positions(PlyTable& t, const std::vector<geom::Vec3>& pos) {
  const char* names[] = {"x", "y", "z"};
  for (int c = 0; c < 3; ++c) {
    std::vector<double> v(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) v[i] = pos[i][c];
    t.add(names[c], PlyType::kFloat64, std::move(v));
  }
}

void add_colors(PlyTable& t, const std::vector<int>& ids, std::uint64_t seed) {
  const char* names[] = {"red", "green", "blue"};
  std::vector<std::vector<double>> rgb(3, std::vector<double>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto c = palette_color(ids[i], seed);
    for (int k = 0; k < 3; ++k) rgb[k][i] = c[k];
  }
  for (int k = 0; k < 3; ++k) t.add(names[k], PlyType::kUInt8, std::move(rgb[k]));
}

void add_ints(PlyTable& t, const char* name, const std::vector<int>& v) {
  t.add(name, PlyType::kInt32, {v.begin(), v.end()});
}

nlohmann::json vec3s(const std::vector<geom::Vec3>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : v) a.push_back({p.x(), p.y(), p.z()});
  return a;
}

std::vector<geom::Vec3> to_vec3s(const nlohmann::json& a) {
  std::vector<geom::Vec3> v;
  v.reserve(a.size());
  for (const auto& p : a) v.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
  return v;
}

}  // namespace

std::array<std::uint8_t, 3> palette_color(int id, std::uint64_t seed) {
  if (id < 0) return {128, 128, 128};
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(id)));
  std::array<std::uint8_t, 3> c{};
  for (int k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(40 + ((h >> (16 * k)) & 0xffff) % 216);
  return c;
}

ExportBundle make_bundle(const eval::Decomposition& d, const geom::PointCloud& scene,
                         const model::PrototypeBank& prototypes, std::vector<int> semantic,
                         std::vector<int> instance, nlohmann::json report) {
  if (semantic.size() != scene.size() || instance.size() != scene.size()) {
    throw ParameterError("label vectors must have one entry per scene point");
  }
  ExportBundle b;
  b.reconstruction = eval::scene_reconstruction(d);
  b.scene_positions = scene.positions;
  b.semantic = std::move(semantic);
  b.instance = std::move(instance);
  b.prototypes = prototypes;
  b.report = std::move(report);
  return b;
}

void export_decomposition(const ExportBundle& b, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UserError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  const geom::PointCloud& rec = b.reconstruction;
  {
    PlyTable t;
    add_positions(t, rec.positions);
    const std::vector<int> proto = rec.class_label.value_or(std::vector<int>(rec.size(), -1));
    add_colors(t, proto, b.palette_seed);
    if (rec.intensity) t.add("intensity", PlyType::kFloat64, *rec.intensity);
    add_ints(t, "prototype", proto);
    add_ints(t, "slot_instance", rec.instance_label.value_or(std::vector<int>(rec.size(), -1)));
    write_ply(out_dir / "reconstruction.ply", t, true);
  }
  {
    PlyTable t;
    add_positions(t, b.scene_positions);
    add_colors(t, b.semantic, b.palette_seed);
    add_ints(t, "class", b.semantic);
    write_ply(out_dir / "semantic.ply", t, true);
  }
  {
    PlyTable t;
    add_positions(t, b.scene_positions);
    add_colors(t, b.instance, b.palette_seed + 1);
    add_ints(t, "instance", b.instance);
    write_ply(out_dir / "instance.ply", t, true);
  }
  {
    PlyTable t;
    std::vector<geom::Vec3> pos;
    std::vector<int> ids;
    std::vector<double> intensity;
    for (int k = 0; k < b.prototypes.count; ++k) {
      const geom::PointCloud c = b.prototypes.scaled_cloud(k);
      pos.insert(pos.end(), c.positions.begin(), c.positions.end());
      ids.insert(ids.end(), c.size(), k);
      intensity.insert(intensity.end(), c.size(), b.prototypes.intensity[static_cast<std::size_t>(k)]);
    }
    add_positions(t, pos);
    add_colors(t, ids, b.palette_seed);
    t.add("intensity", PlyType::kFloat64, std::move(intensity));
    add_ints(t, "prototype", ids);
    write_ply(out_dir / "prototypes.ply", t, true);
  }
  write_file_atomic(out_dir / "report.json", b.report.dump(2) + "\n");
}

void save_bundle(const std::filesystem::path& path, const ExportBundle& b) {
  const auto& rec = b.reconstruction;
  nlohmann::json j;
  j["format"] = "protoscene-export-bundle";
  j["version"] = 1;
  j["palette_seed"] = b.palette_seed;
  j["reconstruction"] = {{"positions", vec3s(rec.positions)},
                         {"intensity", rec.intensity.value_or(std::vector<double>{})},
                         {"prototype", rec.class_label.value_or(std::vector<int>{})},
                         {"slot_instance", rec.instance_label.value_or(std::vector<int>{})}};
  j["scene_positions"] = vec3s(b.scene_positions);
  j["semantic"] = b.semantic;
  j["instance"] = b.instance;
  j["prototypes"] = {{"count", b.prototypes.count},
                     {"points_per_prototype", b.prototypes.points_per_prototype},
                     {"points", vec3s(b.prototypes.points)},
                     {"intensity", b.prototypes.intensity},
                     {"base_scale", b.prototypes.base_scale},
                     {"aniso_scale", vec3s(b.prototypes.aniso_scale)}};
  j["report"] = b.report;
  write_file_atomic(path, j.dump());
}

ExportBundle load_bundle(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "protoscene-export-bundle" || j.at("version") != 1) {
      throw FormatError("not an export bundle: " + path.string());
    }
    ExportBundle b;
    b.palette_seed = j.at("palette_seed").get<std::uint64_t>();
    const auto& r = j.at("reconstruction");
    b.reconstruction.positions = to_vec3s(r.at("positions"));
    const std::size_t n = b.reconstruction.size();
    auto intensity = r.at("intensity").get<std::vector<double>>();
    auto proto = r.at("prototype").get<std::vector<int>>();
    auto inst = r.at("slot_instance").get<std::vector<int>>();
    if (!intensity.empty() || n == 0) b.reconstruction.intensity = std::move(intensity);
    if (!proto.empty() || n == 0) b.reconstruction.class_label = std::move(proto);
    if (!inst.empty() || n == 0) b.reconstruction.instance_label = std::move(inst);
    b.reconstruction.validate();
    b.scene_positions = to_vec3s(j.at("scene_positions"));
    b.semantic = j.at("semantic").get<std::vector<int>>();
    b.instance = j.at("instance").get<std::vector<int>>();
    if (b.semantic.size() != b.scene_positions.size() || b.instance.size() != b.scene_positions.size()) {
      throw FormatError("bundle label columns do not match the scene size");
    }
    const auto& p = j.at("prototypes");
    b.prototypes.count = p.at("count").get<int>();
    b.prototypes.points_per_prototype = p.at("points_per_prototype").get<int>();
    b.prototypes.points = to_vec3s(p.at("points"));
    b.prototypes.intensity = p.at("intensity").get<std::vector<double>>();
    b.prototypes.base_scale = p.at("base_scale").get<std::vector<double>>();
    b.prototypes.aniso_scale = to_vec3s(p.at("aniso_scale"));
    const auto k = static_cast<std::size_t>(b.prototypes.count);
    if (b.prototypes.points.size() != k * static_cast<std::size_t>(b.prototypes.points_per_prototype) ||
        b.prototypes.intensity.size() != k || b.prototypes.base_scale.size() != k ||
        b.prototypes.aniso_scale.size() != k) {
      throw FormatError("bundle prototype arrays are inconsistent");
    }
    b.report = j.at("report");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed export bundle " + path.string() + ": " + e.what());
  }
}

}  // namespace protoscene::io
