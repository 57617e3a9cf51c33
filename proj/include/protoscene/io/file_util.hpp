// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace protoscene::io {

/// Writes `bytes` to a temporary sibling and renames it over `path`.
/// Throws UserError when the directory is not writable.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Whole file as a string. Throws UserError when unreadable.
std::string read_file(const std::filesystem::path& path);

}  // namespace protoscene::io
