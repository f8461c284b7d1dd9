#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spillover::csv {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

struct Line {
  std::size_t number;  // 1-based
  std::string_view text;
};

// Non-empty lines with surrounding whitespace and a trailing '\r' removed.
std::vector<Line> lines(std::string_view text);

// Splits on `sep`, trimming each field. sep == ' ' splits on whitespace runs.
std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view s);

// Strict numeric parses; throw ParseError tagged with `line`.
long long parse_int(std::string_view field, std::size_t line);
double parse_double(std::string_view field, std::size_t line);

// Shortest round-trip representation.
std::string format_double(double value);

}  // namespace spillover::csv
