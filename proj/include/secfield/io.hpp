#pragma once

#include <filesystem>
#include <string>

namespace secfield {

/// Writes to `<path>.tmp` and renames over `path`, so a failed write never
/// leaves a partial file behind. Throws Io.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace secfield
