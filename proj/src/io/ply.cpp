// SPDX-License-Identifier: Apache-2.0

#include "protoscene/io/ply.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "protoscene/errors.hpp"
#include "protoscene/io/file_util.hpp"

namespace protoscene::io {

namespace {

struct TypeInfo {
  PlyType type;
  const char* names[2];
  int size;
};

constexpr TypeInfo kTypes[] = {
    {PlyType::kInt8, {"char", "int8"}, 1},       {PlyType::kUInt8, {"uchar", "uint8"}, 1},
    {PlyType::kInt16, {"short", "int16"}, 2},    {PlyType::kUInt16, {"ushort", "uint16"}, 2},
    {PlyType::kInt32, {"int", "int32"}, 4},      {PlyType::kUInt32, {"uint", "uint32"}, 4},
    {PlyType::kFloat32, {"float", "float32"}, 4}, {PlyType::kFloat64, {"double", "float64"}, 8},
};

const TypeInfo& info(PlyType t) {
  for (const auto& i : kTypes) {
    if (i.type == t) return i;
  }
  return kTypes[7];
}

PlyType parse_type(const std::string& s) {
  for (const auto& i : kTypes) {
    if (s == i.names[0] || s == i.names[1]) return i.type;
  }
  throw FormatError("ply: unsupported property type '" + s + "'");
}

bool is_integer(PlyType t) { return t != PlyType::kFloat32 && t != PlyType::kFloat64; }

void put_le(std::string& out, std::uint64_t bits, int size) {
  for (int i = 0; i < size; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const unsigned char* p, int size) {
  std::uint64_t v = 0;
  for (int i = 0; i < size; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void encode_value(std::string& out, PlyType t, double v) {
  switch (t) {
    case PlyType::kInt8: put_le(out, static_cast<std::uint8_t>(static_cast<std::int8_t>(std::lround(v))), 1); break;
    case PlyType::kUInt8: put_le(out, static_cast<std::uint8_t>(std::lround(v)), 1); break;
    case PlyType::kInt16: put_le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(v))), 2); break;
    case PlyType::kUInt16: put_le(out, static_cast<std::uint16_t>(std::lround(v)), 2); break;
    case PlyType::kInt32: put_le(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(std::lround(v))), 4); break;
    case PlyType::kUInt32: put_le(out, static_cast<std::uint32_t>(std::llround(v)), 4); break;
    case PlyType::kFloat32: {
      const float f = static_cast<float>(v);
      std::uint32_t b;
      std::memcpy(&b, &f, 4);
      put_le(out, b, 4);
      break;
    }
    case PlyType::kFloat64: {
      std::uint64_t b;
      std::memcpy(&b, &v, 8);
      put_le(out, b, 8);
      break;
    }
  }
}

double decode_value(const unsigned char* p, PlyType t) {
  switch (t) {
    case PlyType::kInt8: return static_cast<std::int8_t>(p[0]);
    case PlyType::kUInt8: return p[0];
    case PlyType::kInt16: return static_cast<std::int16_t>(get_le(p, 2));
    case PlyType::kUInt16: return static_cast<std::uint16_t>(get_le(p, 2));
    case PlyType::kInt32: return static_cast<std::int32_t>(get_le(p, 4));
    case PlyType::kUInt32: return static_cast<std::uint32_t>(get_le(p, 4));
    case PlyType::kFloat32: {
      const auto b = static_cast<std::uint32_t>(get_le(p, 4));
      float f;
      std::memcpy(&f, &b, 4);
      return f;
    }
    case PlyType::kFloat64: {
      const std::uint64_t b = get_le(p, 8);
      double d;
      std::memcpy(&d, &b, 8);
      return d;
    }
  }
  return 0.0;
}

std::string format_ascii(PlyType t, double v) {
  if (is_integer(t)) return std::to_string(std::llround(v));
  char buf[40];
  std::snprintf(buf, sizeof buf, t == PlyType::kFloat32 ? "%.9g" : "%.17g", v);
  return buf;
}

}  // namespace

void PlyTable::add(std::string name, PlyType type, std::vector<double> values) {
  if (!columns.empty() && values.size() != rows()) throw std::logic_error("ply: column length mismatch");
  properties.push_back({std::move(name), type});
  columns.push_back(std::move(values));
}

int PlyTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < properties.size(); ++i) {
    if (properties[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::string encode_ply(const PlyTable& t, bool binary) {
  std::string out = "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  for (const auto& c : t.comments) out += "comment " + c + "\n";
  out += "element vertex " + std::to_string(t.rows()) + "\n";
  for (const auto& p : t.properties) out += std::string("property ") + info(p.type).names[0] + " " + p.name + "\n";
  out += "end_header\n";
  const std::size_t n = t.rows();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < t.properties.size(); ++c) {
      if (binary) {
        encode_value(out, t.properties[c].type, t.columns[c][r]);
      } else {
        if (c) out.push_back(' ');
        out += format_ascii(t.properties[c].type, t.columns[c][r]);
      }
    }
    if (!binary) out.push_back('\n');
  }
  return out;
}

PlyTable decode_ply(const std::string& bytes) {
  const auto end = bytes.find("end_header");
  if (bytes.rfind("ply", 0) != 0 || end == std::string::npos) throw FormatError("ply: missing header");
  auto body = bytes.find('\n', end);
  if (body == std::string::npos) throw FormatError("ply: truncated header");
  ++body;
  std::istringstream hs(bytes.substr(0, end));
  std::string line;
  PlyTable t;
  bool binary = false;
  bool format_seen = false;
  bool in_vertex = false;
  bool vertex_seen = false;
  std::size_t rows = 0;
  std::size_t skip_before = 0;  // ascii lines or binary bytes of elements before vertex
  bool element_before_vertex = false;
  while (std::getline(hs, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw FormatError("ply: unsupported format '" + fmt + "'");
      }
      format_seen = true;
    } else if (word == "comment" || word == "obj_info") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      t.comments.push_back(rest);
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_seen = true;
        rows = count;
      } else if (!vertex_seen) {
        element_before_vertex = true;
        skip_before += count;
      }
    } else if (word == "property") {
      std::string type, name;
      ls >> type;
      if (type == "list") throw FormatError("ply: list properties are not supported in the vertex element");
      ls >> name;
      if (in_vertex) t.properties.push_back({name, parse_type(type)});
    }
  }
  if (!format_seen || !vertex_seen) throw FormatError("ply: header lacks format or vertex element");
  if (element_before_vertex && binary) throw FormatError("ply: elements before vertex are not supported in binary files");
  t.columns.assign(t.properties.size(), std::vector<double>(rows));

  if (binary) {
    std::size_t stride = 0;
    for (const auto& p : t.properties) stride += static_cast<std::size_t>(info(p.type).size);
    if (bytes.size() < body + stride * rows) throw FormatError("ply: truncated binary body");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + body;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < t.properties.size(); ++c) {
        t.columns[c][r] = decode_value(p, t.properties[c].type);
        p += info(t.properties[c].type).size;
      }
    }
  } else {
    std::istringstream bs(bytes.substr(body));
    for (std::size_t i = 0; i < skip_before; ++i) std::getline(bs, line);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(bs, line)) throw FormatError("ply: truncated ascii body");
      std::istringstream ls(line);
      for (std::size_t c = 0; c < t.properties.size(); ++c) {
        std::string tok;
        if (!(ls >> tok)) throw FormatError("ply: short row " + std::to_string(r));
        if (tok == "nan" || tok == "NaN" || tok == "-nan") {
          t.columns[c][r] = std::nan("");
          continue;
        }
        char* e = nullptr;
        t.columns[c][r] = std::strtod(tok.c_str(), &e);
        if (*e != '\0') throw FormatError("ply: bad value '" + tok + "' in row " + std::to_string(r));
      }
    }
  }
  return t;
}

PlyTable read_ply(const std::filesystem::path& path) { return decode_ply(read_file(path)); }

void write_ply(const std::filesystem::path& path, const PlyTable& t, bool binary) {
  write_file_atomic(path, encode_ply(t, binary));
}

}  // namespace protoscene::io
