// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "protoscene/geometry/point_cloud.hpp"

namespace protoscene::io {

enum class SceneFormat { kPlyAscii, kPlyBinary, kColumnar };

/// Raw intensity range assumed when a file declares none (16-bit LiDAR).
inline constexpr double kDefaultIntensityMax = 65535.0;

struct LoadReport {
  std::size_t rejected_rows = 0;           // rows with a NaN or infinite coordinate
  std::vector<std::string> ignored_columns;
  std::vector<std::string> warnings;
};

/// Reads a .ply (ascii or binary little-endian) or a columnar text file
/// (.txt, .xyz, .csv). Recognised columns: x y z intensity red green blue
/// class instance. Intensity is mapped from the declared range (comment
/// "intensity_range <lo> <hi>") to [0,1]. Throws FormatError when x, y or z
/// is missing.
geom::PointCloud load_scene(const std::filesystem::path& path, LoadReport* report = nullptr);

/// Format implied by the extension: .ply -> binary PLY, anything else -> columnar.
SceneFormat format_for(const std::filesystem::path& path);

/// Writes every channel present; intensity is stored in [0,1] with a
/// declared range of [0,1]. Atomic.
void save_scene(const std::filesystem::path& path, const geom::PointCloud& cloud, SceneFormat format);

/// Columnar text: "# intensity_range lo hi" comments, a header line of
/// column names, then whitespace- or comma-separated rows.
geom::PointCloud parse_columnar(const std::string& text, LoadReport* report = nullptr);

}  // namespace protoscene::io
