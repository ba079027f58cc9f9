#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace scgbin {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// Writes to `path` through a temporary sibling file and a rename, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

std::vector<std::string_view> split(std::string_view line, char sep);

std::string_view trim(std::string_view s);

/// Strict numeric parse; throws ParameterError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);

}  // namespace scgbin
