#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace svy::io {

// Writes content to a sibling temp file and renames it over path, so a
// failed run never leaves a half-written output behind.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

std::vector<std::string> split_csv_line(std::string_view line);

// Shortest representation that round-trips: 17 significant digits.
std::string format_double(double v);

// Parses a full cell as a double; returns false on any trailing garbage.
bool parse_double(std::string_view cell, double& out);

}  // namespace svy::io
