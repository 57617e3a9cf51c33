// SPDX-License-Identifier: Apache-2.0

#include "protoscene/io/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "protoscene/errors.hpp"
#include "protoscene/io/file_util.hpp"
#include "protoscene/io/ply.hpp"

namespace protoscene::io {

namespace {

struct Columns {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::vector<bool> integer_rgb;  // stored as integers (8/16 bit) rather than [0,1]
  double intensity_lo = 0.0;
  double intensity_hi = kDefaultIntensityMax;
};

std::string canonical(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  if (name == "r") return "red";
  if (name == "g") return "green";
  if (name == "b") return "blue";
  if (name == "classification" || name == "label" || name == "class_label") return "class";
  if (name == "instance_label") return "instance";
  if (name == "scalar_intensity") return "intensity";
  return name;
}

void parse_range_comment(const std::string& c, Columns& cols) {
  std::istringstream ss(c);
  std::string key;
  ss >> key;
  if (key != "intensity_range") return;
  double lo, hi;
  if (!(ss >> lo >> hi) || !(hi > lo)) throw FormatError("bad intensity_range declaration '" + c + "'");
  cols.intensity_lo = lo;
  cols.intensity_hi = hi;
}

geom::PointCloud build(const Columns& cols, LoadReport* report) {
  std::map<std::string, std::size_t> at;
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  static const char* known[] = {"x", "y", "z", "intensity", "red", "green", "blue", "class", "instance"};
  for (std::size_t i = 0; i < cols.names.size(); ++i) {
    const std::string n = canonical(cols.names[i]);
    if (std::find(std::begin(known), std::end(known), n) == std::end(known)) {
      rep.ignored_columns.push_back(cols.names[i]);
      rep.warnings.push_back("ignoring unknown column '" + cols.names[i] + "'");
      continue;
    }
    at[n] = i;
  }
  for (const char* req : {"x", "y", "z"}) {
    if (!at.count(req)) throw FormatError(std::string("scene file lacks column '") + req + "'");
  }
  const bool has_rgb = at.count("red") && at.count("green") && at.count("blue");
  const std::size_t rows = cols.values.empty() ? 0 : cols.values.front().size();

  geom::PointCloud pc;
  if (at.count("intensity")) pc.intensity = std::vector<double>{};
  if (has_rgb) pc.color = std::vector<geom::Vec3>{};
  if (at.count("class")) pc.class_label = std::vector<int>{};
  if (at.count("instance")) pc.instance_label = std::vector<int>{};
  double rgb_scale = 1.0;
  if (has_rgb) {
    double mx = 0.0;
    for (const char* c : {"red", "green", "blue"}) {
      for (double v : cols.values[at[c]]) mx = std::max(mx, v);
    }
    if (cols.integer_rgb[at["red"]] || mx > 1.0) rgb_scale = mx > 255.0 ? 1.0 / 65535.0 : 1.0 / 255.0;
  }
  const double span = cols.intensity_hi - cols.intensity_lo;
  for (std::size_t r = 0; r < rows; ++r) {
    const double x = cols.values[at["x"]][r];
    const double y = cols.values[at["y"]][r];
    const double z = cols.values[at["z"]][r];
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      ++rep.rejected_rows;
      continue;
    }
    pc.positions.emplace_back(x, y, z);
    if (pc.intensity) {
      const double v = (cols.values[at["intensity"]][r] - cols.intensity_lo) / span;
      pc.intensity->push_back(std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0));
    }
    if (pc.color) {
      geom::Vec3 c(cols.values[at["red"]][r], cols.values[at["green"]][r], cols.values[at["blue"]][r]);
      pc.color->push_back((c * rgb_scale).cwiseMax(0.0).cwiseMin(1.0));
    }
    if (pc.class_label) pc.class_label->push_back(static_cast<int>(std::lround(cols.values[at["class"]][r])));
    if (pc.instance_label) pc.instance_label->push_back(static_cast<int>(std::lround(cols.values[at["instance"]][r])));
  }
  if (rep.rejected_rows) rep.warnings.push_back("rejected " + std::to_string(rep.rejected_rows) + " rows with non-finite coordinates");
  return pc;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

geom::PointCloud parse_columnar(const std::string& text, LoadReport* report) {
  Columns cols;
  std::istringstream is(text);
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      parse_range_comment(line.substr(first + 1), cols);
      continue;
    }
    const auto fields = split_fields(line);
    if (!header) {
      cols.names = fields;
      cols.values.assign(fields.size(), {});
      cols.integer_rgb.assign(fields.size(), false);
      header = true;
      continue;
    }
    if (fields.size() != cols.names.size()) {
      throw FormatError("columnar line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols.names.size()) + " fields");
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      char* e = nullptr;
      const double v = std::strtod(fields[c].c_str(), &e);
      if (*e != '\0') throw FormatError("columnar line " + std::to_string(line_no) + ": bad value '" + fields[c] + "'");
      cols.values[c].push_back(v);
    }
  }
  if (!header) throw FormatError("columnar file has no header line");
  return build(cols, report);
}

geom::PointCloud load_scene(const std::filesystem::path& path, LoadReport* report) {
  const std::string bytes = read_file(path);
  if (bytes.rfind("ply", 0) == 0) {
    const PlyTable t = decode_ply(bytes);
    Columns cols;
    for (const auto& c : t.comments) parse_range_comment(c, cols);
    for (std::size_t i = 0; i < t.properties.size(); ++i) {
      cols.names.push_back(t.properties[i].name);
      cols.values.push_back(t.columns[i]);
      const auto ty = t.properties[i].type;
      cols.integer_rgb.push_back(ty != PlyType::kFloat32 && ty != PlyType::kFloat64);
    }
    return build(cols, report);
  }
  return parse_columnar(bytes, report);
}

SceneFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".ply" ? SceneFormat::kPlyBinary : SceneFormat::kColumnar;
}

void save_scene(const std::filesystem::path& path, const geom::PointCloud& pc, SceneFormat format) {
  pc.validate();
  PlyTable t;
  const std::size_t n = pc.size();
  std::vector<double> x(n), y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = pc.positions[i].x();
    y[i] = pc.positions[i].y();
    z[i] = pc.positions[i].z();
  }
  t.add("x", PlyType::kFloat64, std::move(x));
  t.add("y", PlyType::kFloat64, std::move(y));
  t.add("z", PlyType::kFloat64, std::move(z));
  if (pc.intensity) {
    t.comments.push_back("intensity_range 0 1");
    t.add("intensity", PlyType::kFloat64, *pc.intensity);
  }
  if (pc.color) {
    const char* names[] = {"red", "green", "blue"};
    for (int c = 0; c < 3; ++c) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = (*pc.color)[i][c];
      t.add(names[c], PlyType::kFloat64, std::move(v));
    }
  }
  if (pc.class_label) t.add("class", PlyType::kInt32, {pc.class_label->begin(), pc.class_label->end()});
  if (pc.instance_label) t.add("instance", PlyType::kInt32, {pc.instance_label->begin(), pc.instance_label->end()});

  if (format != SceneFormat::kColumnar) {
    write_ply(path, t, format == SceneFormat::kPlyBinary);
    return;
  }
  std::string out;
  for (const auto& c : t.comments) out += "# " + c + "\n";
  for (std::size_t c = 0; c < t.properties.size(); ++c) out += (c ? " " : "") + t.properties[c].name;
  out += "\n";
  char buf[40];
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < t.properties.size(); ++c) {
      if (t.properties[c].type == PlyType::kInt32) {
        std::snprintf(buf, sizeof buf, "%lld", std::llround(t.columns[c][r]));
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", t.columns[c][r]);
      }
      if (c) out.push_back(' ');
      out += buf;
    }
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

}  // namespace protoscene::io
