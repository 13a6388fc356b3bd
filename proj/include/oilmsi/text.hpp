#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace oilmsi::text {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Strict parse of a whole token; throws ValidationError on junk.
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over the target so a
/// failed run never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace oilmsi::text
