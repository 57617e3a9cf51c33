// SPDX-License-Identifier: Apache-2.0
//
// Static visualisation output of a decomposition:
//   reconstruction.ply  reconstruction in the scene frame, coloured by prototype
//   semantic.ply        input points coloured by predicted class
//   instance.ply        input points coloured by predicted instance
//   prototypes.ply      prototypes in their canonical frame
//   report.json
// Everything needed to rewrite these files is kept in an ExportBundle, which
// can be saved and exported again byte for byte.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "protoscene/evaluation/decompose.hpp"
#include "protoscene/model/prototypes.hpp"

namespace protoscene::io {

inline constexpr std::uint64_t kDefaultPaletteSeed = 17;

inline constexpr const char* kExportFiles[] = {"reconstruction.ply", "semantic.ply", "instance.ply",
                                                "prototypes.ply", "report.json"};

/// 8-bit colour of an id; a pure function of (id, seed). Negative ids are grey.
std::array<std::uint8_t, 3> palette_color(int id, std::uint64_t seed);

struct ExportBundle {
  geom::PointCloud reconstruction;  // class_label = prototype id, instance_label = slot instance
  std::vector<geom::Vec3> scene_positions;
  std::vector<int> semantic;        // per scene point
  std::vector<int> instance;        // per scene point
  model::PrototypeBank prototypes;
  nlohmann::json report;
  std::uint64_t palette_seed = kDefaultPaletteSeed;
};

ExportBundle make_bundle(const eval::Decomposition& d, const geom::PointCloud& scene,
                         const model::PrototypeBank& prototypes, std::vector<int> semantic,
                         std::vector<int> instance, nlohmann::json report);

/// Writes the five files; creates `out_dir` if needed. Throws UserError when
/// the directory cannot be written.
void export_decomposition(const ExportBundle& b, const std::filesystem::path& out_dir);

void save_bundle(const std::filesystem::path& path, const ExportBundle& b);
/// Throws FormatError on a malformed bundle.
ExportBundle load_bundle(const std::filesystem::path& path);

}  // namespace protoscene::io
