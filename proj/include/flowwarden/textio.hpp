#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fw {

// All on-disk formats are UTF-8, LF-terminated, tab-separated line records
// with '#'-prefixed header lines. Numbers use '.' as decimal separator.

std::vector<std::string> split_fields(std::string_view line, char sep = '\t');

// 17 significant digits: enough for bit-stable double round-trips.
std::string dec17(double v);
// Fixed 6 decimals, for timestamps and durations (microsecond resolution).
std::string dec6(double v);

double parse_double(const std::string& text, const char* what);
std::uint64_t parse_u64(const std::string& text, const char* what);
int parse_int(const std::string& text, const char* what);

// Reads a whole text file, throwing on I/O failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Splits into lines, dropping a trailing empty line. Keeps header lines;
// callers filter on '#'.
std::vector<std::string> read_lines(const std::string& path);

// key=value configuration files: one pair per line, '#' comments, blank
// lines ignored.
std::vector<std::pair<std::string, std::string>> parse_kv_lines(const std::string& text);

}  // namespace fw
