#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace reidaudit {

// Minimal RFC-4180 CSV support: quoted fields, embedded commas/quotes,
// no embedded newlines.
std::vector<std::string> split_csv_row(const std::string& line);
std::string join_csv_row(const std::vector<std::string>& fields);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes to a temp file in the same directory, then renames into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// "%.*g"-style shortest stable formatting used in all data outputs.
std::string format_double(double v);

}  // namespace reidaudit
