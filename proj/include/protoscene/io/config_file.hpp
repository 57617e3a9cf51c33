// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "protoscene/training/config.hpp"

namespace protoscene::io {

train::TrainConfig load_config(const std::filesystem::path& path, const train::TrainConfig& base = {});
void save_config(const std::filesystem::path& path, const train::TrainConfig& cfg);

/// Generic form of the sectioned key = value syntax. Sections may repeat.
struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;  // "" for assignments before the first header
  int line = 0;
  std::vector<KeyValue> entries;
};

/// Throws FormatError with the line number on malformed input.
std::vector<Section> parse_sections(std::string_view text);

}  // namespace protoscene::io
