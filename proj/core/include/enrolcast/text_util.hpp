#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace enrolcast {

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

/// Strict decimal parse of the whole string; throws Error on trailing
/// garbage or empty input.
double parse_double(std::string_view text);
int parse_int(std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string to_lower(std::string_view s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace enrolcast
