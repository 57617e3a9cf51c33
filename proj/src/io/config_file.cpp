// SPDX-License-Identifier: Apache-2.0

#include "protoscene/io/config_file.hpp"

#include "protoscene/errors.hpp"
#include "protoscene/io/file_util.hpp"

namespace protoscene::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

train::TrainConfig load_config(const std::filesystem::path& path, const train::TrainConfig& base) {
  const std::string text = read_file(path);
  try {
    return train::parse_config(text, base);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const train::TrainConfig& cfg) {
  write_file_atomic(path, train::serialize_config(cfg));
}

std::vector<Section> parse_sections(std::string_view text) {
  std::vector<Section> out;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(where + "unterminated section header");
      out.push_back({std::string(trim(line.substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError(where + "empty key");
    if (out.empty()) out.push_back({"", 0, {}});
    out.back().entries.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return out;
}

}  // namespace protoscene::io
