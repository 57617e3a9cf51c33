// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "protoscene/errors.hpp"
#include "protoscene/evaluation/decompose.hpp"
#include "protoscene/evaluation/segmentation.hpp"
#include "protoscene/io/config_file.hpp"
#include "protoscene/io/export.hpp"
#include "protoscene/io/file_util.hpp"
#include "protoscene/io/ply.hpp"
#include "protoscene/io/report.hpp"
#include "protoscene/io/scene_io.hpp"
#include "protoscene/io/synth.hpp"

using namespace protoscene;
using namespace protoscene::io;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("protoscene_io_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

PointCloud full_cloud(std::mt19937_64& rng, std::size_t n) {
  PointCloud p = random_cloud(rng, n, -50.0, 50.0, true);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  p.color = std::vector<Vec3>{};
  p.class_label = std::vector<int>{};
  p.instance_label = std::vector<int>{};
  for (std::size_t i = 0; i < n; ++i) {
    p.color->emplace_back(u(rng), u(rng), u(rng));
    p.class_label->push_back(static_cast<int>(i % 3));
    p.instance_label->push_back(static_cast<int>(i % 7) - 1);
  }
  return p;
}

// Cones only, on a 40 m square.
SynthSpec small_spec(int cones) {
  SynthSpec s;
  s.extent_m = 40.0;
  s.roughness_m = 0.3;
  s.ground_density = 2.0;
  s.object_density = 3.0;
  s.seed = 11;
  Archetype a;
  a.shape = Shape::kCone;
  a.count_min = a.count_max = cones;
  a.width_m = 3.0;
  a.height_m = 4.0;
  a.intensity = 0.7;
  a.class_id = 1;
  s.archetypes = {a};
  return s;
}

}  // namespace

TEST_CASE("ply ascii and binary round trip") {
  PlyTable t;
  t.comments = {"made by a test"};
  t.add("x", PlyType::kFloat64, {0.125, -3.5, 1e6});
  t.add("f", PlyType::kFloat32, {0.5, -2.25, 3.0});
  t.add("u8", PlyType::kUInt8, {0, 17, 255});
  t.add("i16", PlyType::kInt16, {-32768, 0, 32767});
  t.add("u32", PlyType::kUInt32, {0, 1, 4294967295.0});
  t.add("i32", PlyType::kInt32, {-5, 6, -7});
  for (bool binary : {false, true}) {
    const PlyTable r = decode_ply(encode_ply(t, binary));
    CHECK(r.comments == t.comments);
    REQUIRE(r.properties.size() == t.properties.size());
    for (std::size_t i = 0; i < t.properties.size(); ++i) {
      CHECK(r.properties[i].name == t.properties[i].name);
      CHECK(r.properties[i].type == t.properties[i].type);
      CHECK(r.columns[i] == t.columns[i]);
    }
    CHECK(r.find("u8") == 2);
    CHECK(r.find("nope") == -1);
  }
  CHECK_THROWS_AS(decode_ply("not a ply"), FormatError);
  std::string truncated = encode_ply(t, true);
  truncated.resize(truncated.size() - 5);
  CHECK_THROWS_AS(decode_ply(truncated), FormatError);
}

TEST_CASE("scene files round trip every channel") {
  TempDir dir("scene");
  std::mt19937_64 rng(4);
  const PointCloud p = full_cloud(rng, 40);
  for (const char* name : {"a.ply", "a.txt"}) {
    const fs::path path = dir.path / name;
    save_scene(path, p, format_for(path));
    const PointCloud r = load_scene(path);
    REQUIRE(r.size() == p.size());
    REQUIRE(r.intensity);
    REQUIRE(r.color);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK((r.positions[i] - p.positions[i]).norm() < 1e-9);
      CHECK(r.intensity->at(i) == doctest::Approx(p.intensity->at(i)).epsilon(1e-9));
      CHECK((r.color->at(i) - p.color->at(i)).norm() < 1e-2);
    }
    CHECK(*r.class_label == *p.class_label);
    CHECK(*r.instance_label == *p.instance_label);
  }
  CHECK(format_for("x.ply") == SceneFormat::kPlyBinary);
  CHECK(format_for("x.xyz") == SceneFormat::kColumnar);
  CHECK_THROWS_AS(load_scene(dir.path / "missing.ply"), UserError);
}

TEST_CASE("columnar parsing") {
  SUBCASE("five rows") {
    const PointCloud p = parse_columnar("x y z\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1 1 1\n");
    CHECK(p.size() == 5);
    CHECK_FALSE(p.intensity);
    CHECK(p.positions[4] == Vec3(1, 1, 1));
  }
  SUBCASE("rows with non-finite coordinates are rejected") {
    std::string text = "x,y,z,intensity\n";
    for (int i = 0; i < 10; ++i) {
      const std::string x = i == 3 ? "nan" : i == 7 ? "-inf" : std::to_string(i);
      text += x + "," + std::to_string(i) + ",0," + std::to_string(100 * i) + "\n";
    }
    LoadReport rep;
    const PointCloud p = parse_columnar(text, &rep);
    CHECK(p.size() == 8);
    CHECK(rep.rejected_rows == 2);
    CHECK_FALSE(rep.warnings.empty());
    // Default 16-bit range.
    CHECK(p.intensity->at(1) == doctest::Approx(100.0 / kDefaultIntensityMax));
  }
  SUBCASE("missing coordinate") {
    CHECK_THROWS_AS(parse_columnar("x y intensity\n0 0 1\n"), FormatError);
  }
  SUBCASE("declared intensity range") {
    const PointCloud p = parse_columnar("# intensity_range 10 20\nx y z intensity\n0 0 0 15\n0 0 0 5\n0 0 0 30\n");
    CHECK(p.intensity->at(0) == doctest::Approx(0.5));
    CHECK(p.intensity->at(1) == 0.0);
    CHECK(p.intensity->at(2) == 1.0);
    CHECK_THROWS_AS(parse_columnar("# intensity_range 5 5\nx y z\n"), FormatError);
  }
  SUBCASE("unknown columns are ignored") {
    LoadReport rep;
    const PointCloud p = parse_columnar("x y z gps_time\n1 2 3 99\n", &rep);
    CHECK(p.size() == 1);
    CHECK(rep.ignored_columns == std::vector<std::string>{"gps_time"});
  }
  SUBCASE("malformed rows") {
    CHECK_THROWS_AS(parse_columnar("x y z\n1 2\n"), FormatError);
    CHECK_THROWS_AS(parse_columnar("x y z\n1 2 abc\n"), FormatError);
    CHECK_THROWS_AS(parse_columnar("# only a comment\n"), FormatError);
  }
}

TEST_CASE("synthetic scenes") {
  const SynthSpec spec = small_spec(12);
  const SynthScene a = generate_synthetic(spec);
  const SynthScene b = generate_synthetic(spec);
  REQUIRE(a.cloud.size() == b.cloud.size());
  CHECK(a.cloud.positions == b.cloud.positions);
  CHECK(*a.cloud.intensity == *b.cloud.intensity);

  REQUIRE(a.cloud.class_label);
  REQUIRE(a.cloud.instance_label);
  CHECK(a.objects.size() == 12);
  std::set<int> ids;
  std::map<int, std::size_t> hist;
  for (std::size_t i = 0; i < a.cloud.size(); ++i) {
    const int c = a.cloud.class_label->at(i);
    const int id = a.cloud.instance_label->at(i);
    CHECK(c >= 0);
    CHECK(id >= 0);
    ++hist[c];
    if (id > 0) {
      ids.insert(id);
      CHECK(c == 1);
    } else {
      CHECK(c == spec.ground_class);
    }
    const Vec3& q = a.cloud.positions[i];
    CHECK(q.x() >= -1.0);
    CHECK(q.x() <= spec.extent_m + 1.0);
  }
  CHECK(ids.size() == 12);
  CHECK(*ids.begin() == 1);
  CHECK(*ids.rbegin() == 12);
  CHECK(hist.size() == 2);
  // Ground points are roughly density * area.
  const double ground = static_cast<double>(hist[0]);
  CHECK(ground > 0.5 * spec.ground_density * spec.extent_m * spec.extent_m);

  // Object bases stay on the terrain and footprints do not interpenetrate.
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    const PlantedObject& o = a.objects[i];
    CHECK(o.base.z() == doctest::Approx(terrain_height(spec, o.base.x(), o.base.y())));
    for (std::size_t j = 0; j < i; ++j) {
      const double r = spec.archetypes[0].footprint_radius();
      const double d = (o.base.head<2>() - a.objects[j].base.head<2>()).norm();
      CHECK(d >= r * (o.scale + a.objects[j].scale) - 1e-9);
    }
  }

  SynthSpec other = spec;
  other.seed = 12;
  CHECK(generate_synthetic(other).cloud.positions != a.cloud.positions);

  SynthSpec crowded = small_spec(400);
  CHECK_THROWS_AS(generate_synthetic(crowded), DomainError);

  SynthSpec bad = spec;
  bad.archetypes[0].count_min = 5;
  bad.archetypes[0].count_max = 2;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  CHECK_THROWS_AS(parse_shape("sphere"), ParameterError);
  for (Shape s : {Shape::kCone, Shape::kBox, Shape::kCylinder, Shape::kComposite}) CHECK(parse_shape(shape_name(s)) == s);
}

TEST_CASE("surface sampling stays on the shape") {
  std::mt19937_64 rng(2);
  Archetype cone;
  cone.width_m = 4.0;
  cone.height_m = 6.0;
  for (const Vec3& q : sample_surface(cone, 1.5, 500, rng)) {
    const double r = std::hypot(q.x(), q.y());
    CHECK(q.z() >= -1e-9);
    CHECK(q.z() <= 9.0 + 1e-9);
    // Lateral surface: r = R (1 - z / H), or the base disc.
    CHECK(r <= 3.0 * (1.0 - q.z() / 9.0) + 1e-9);
  }
  Archetype box;
  box.shape = Shape::kBox;
  box.width_m = 10.0;
  box.depth_m = 4.0;
  box.height_m = 3.0;
  CHECK(box.footprint_radius() == doctest::Approx(std::hypot(5.0, 2.0)));
  for (const Vec3& q : sample_surface(box, 1.0, 300, rng)) {
    CHECK(std::abs(q.x()) <= 5.0 + 1e-9);
    CHECK(std::abs(q.y()) <= 2.0 + 1e-9);
    CHECK(q.z() <= 3.0 + 1e-9);
  }
  CHECK(surface_area(box, 2.0) == doctest::Approx(4.0 * surface_area(box, 1.0)));
}

TEST_CASE("synth spec text round trip") {
  SynthSpec s = default_spec();
  s.seed = 99;
  s.noise_m = 0.05;
  const SynthSpec r = parse_synth_spec(serialize_synth_spec(s));
  CHECK(serialize_synth_spec(r) == serialize_synth_spec(s));
  CHECK(r.seed == 99);
  REQUIRE(r.archetypes.size() == 2);
  CHECK(r.archetypes[1].shape == Shape::kBox);
  CHECK(r.archetypes[1].depth() == 8.0);

  const SynthSpec t = parse_synth_spec(
      "[scene]\nextent_m = 30\n[[archetype]]\nshape = \"cylinder\"\ncount = 3\nclass = 4\n");
  CHECK(t.extent_m == 30.0);
  REQUIRE(t.archetypes.size() == 1);
  CHECK(t.archetypes[0].shape == Shape::kCylinder);
  CHECK(t.archetypes[0].count_max == 3);
  CHECK(t.archetypes[0].class_id == 4);

  CHECK_THROWS_AS(parse_synth_spec("[scene]\nbogus = 1\n"), FormatError);
  CHECK_THROWS_AS(parse_synth_spec("[planet]\n"), FormatError);
  CHECK_THROWS_AS(parse_synth_spec("[archetype]\nshape = blob\n"), FormatError);
  CHECK_THROWS_AS(parse_synth_spec("[scene]\nextent_m = -1\n"), FormatError);
}

TEST_CASE("sectioned key value files") {
  const auto secs = parse_sections("a = 1\n# c\n[one]\nb = two # trailing\n\n[one]\nc=3\n");
  REQUIRE(secs.size() == 3);
  CHECK(secs[0].name.empty());
  CHECK(secs[0].entries[0].key == "a");
  CHECK(secs[1].name == "one");
  CHECK(secs[1].entries[0].value == "two");
  CHECK(secs[1].entries[0].line == 4);
  CHECK(secs[2].entries[0].value == "3");
  CHECK_THROWS_AS(parse_sections("[open\n"), FormatError);
  CHECK_THROWS_AS(parse_sections("novalue\n"), FormatError);
  CHECK_THROWS_AS(parse_sections(" = 3\n"), FormatError);

  TempDir dir("config");
  train::TrainConfig c;
  c.batch_size = 5;
  c.model.slots = 7;
  c.seed = 1234;
  save_config(dir.path / "c.txt", c);
  CHECK(load_config(dir.path / "c.txt") == c);
  write_file_atomic(dir.path / "bad.txt", "[model]\nslots = many\n");
  CHECK_THROWS_AS(load_config(dir.path / "bad.txt"), FormatError);
  CHECK_THROWS_AS(load_config(dir.path / "absent.txt"), UserError);
}

TEST_CASE("palette is a stable function of id and seed") {
  CHECK(palette_color(3, 17) == palette_color(3, 17));
  CHECK(palette_color(3, 17) != palette_color(4, 17));
  CHECK(palette_color(3, 17) != palette_color(3, 18));
  CHECK(palette_color(-1, 17) == palette_color(-5, 2));
}

TEST_CASE("export writes five files and re-exports identically") {
  model::ModelConfig mc;
  mc.slots = 2;
  mc.prototypes = 2;
  mc.points_per_prototype = 10;
  mc.grid_resolution = 4;
  mc.point_width = 4;
  mc.scene_width = 6;
  mc.slot_width = 5;
  model::Network net(mc, 8);
  std::mt19937_64 rng(5);
  PointCloud scene = random_cloud(rng, 300, 0.0, 18.0, true);
  scene.class_label = std::vector<int>(scene.size(), 0);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    scene.positions[i].z() *= 0.1;
    if (scene.positions[i].x() < 9.0) (*scene.class_label)[i] = 1;
  }
  const eval::Decomposition d = eval::decompose(net, {1}, scene, {10.0, true, nullptr});
  const eval::PrototypeLabels labels = eval::label_prototypes(d, scene);
  std::vector<int> sem = eval::semantic_segmentation(d, labels);
  std::vector<int> inst = eval::instance_segmentation(d, {0, 1});
  const EvaluationReport rep = build_report(d, scene, 1, &labels, &sem);
  ExportBundle b = make_bundle(d, scene, net.bank(), sem, inst, to_json(rep));

  TempDir dir("export");
  export_decomposition(b, dir.path / "out");
  for (const char* f : kExportFiles) CHECK(fs::exists(dir.path / "out" / f));
  CHECK(read_ply(dir.path / "out" / "semantic.ply").rows() == scene.size());
  CHECK(read_ply(dir.path / "out" / "instance.ply").rows() == scene.size());
  CHECK(read_ply(dir.path / "out" / "prototypes.ply").rows() == 20);
  const PlyTable rec = read_ply(dir.path / "out" / "reconstruction.ply");
  CHECK(rec.rows() == b.reconstruction.size());
  REQUIRE(rec.find("red") >= 0);
  REQUIRE(rec.find("prototype") >= 0);
  for (std::size_t i = 0; i < rec.rows(); ++i) {
    const int id = static_cast<int>(rec.columns[static_cast<std::size_t>(rec.find("prototype"))][i]);
    CHECK(rec.columns[static_cast<std::size_t>(rec.find("red"))][i] == palette_color(id, b.palette_seed)[0]);
  }

  save_bundle(dir.path / "bundle.json", b);
  const ExportBundle r = load_bundle(dir.path / "bundle.json");
  export_decomposition(r, dir.path / "again");
  for (const char* f : kExportFiles) CHECK(read_file(dir.path / "out" / f) == read_file(dir.path / "again" / f));

  write_file_atomic(dir.path / "junk.json", "{\"format\": \"other\"}");
  CHECK_THROWS_AS(load_bundle(dir.path / "junk.json"), FormatError);
  write_file_atomic(dir.path / "broken.json", "{");
  CHECK_THROWS_AS(load_bundle(dir.path / "broken.json"), FormatError);
  CHECK_THROWS_AS(make_bundle(d, scene, net.bank(), {}, inst, {}), ParameterError);
}

TEST_CASE("report json") {
  eval::SelectionReport s;
  const nlohmann::json j = to_json(s);
  CHECK(j.is_object());
  EvaluationReport r;
  r.stage = 3;
  r.patches = 4;
  r.prototype_class = {1, -1};
  const nlohmann::json k = to_json(r);
  CHECK(k.at("stage") == 3);
  CHECK(k.at("patches") == 4);
  CHECK(k.at("selection_report").is_null());
  CHECK(k.at("miou").is_null());
}
