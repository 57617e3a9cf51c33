// SPDX-License-Identifier: Apache-2.0
//
// Column-oriented access to the vertex element of PLY files (ascii and
// binary little-endian). Values are held as doubles whatever their stored type.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace protoscene::io {

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat64;
};

struct PlyTable {
  std::vector<std::string> comments;
  std::vector<PlyProperty> properties;
  std::vector<std::vector<double>> columns;  // one per property

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  void add(std::string name, PlyType type, std::vector<double> values);
  /// Index of a property or -1.
  int find(const std::string& name) const;
};

/// Serialised file contents.
std::string encode_ply(const PlyTable& t, bool binary);

/// Parses the vertex element; elements after it are ignored. Throws FormatError.
PlyTable decode_ply(const std::string& bytes);

PlyTable read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PlyTable& t, bool binary);

}  // namespace protoscene::io
