#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tlab {

/// Writes `content` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest round-trip decimal for a double; deterministic across runs.
std::string format_number(double value);

}  // namespace tlab
