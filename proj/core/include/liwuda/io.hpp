#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace liwuda::io {

// Shortest text that reads back to the identical double (17 significant digits).
std::string format_double(double v);

// Strict parse of the whole token; throws ParseError with `context` on failure.
double parse_double(std::string_view token, std::string_view context);
long long parse_int(std::string_view token, std::string_view context);

std::vector<std::string_view> split(std::string_view line, char delimiter);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over `path`, so readers never
// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace liwuda::io
