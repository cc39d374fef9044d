#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nlsd::io {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Parses a decimal or scientific-notation number; surrounding blanks allowed.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::string_view trim(std::string_view text) noexcept;

/// Splits one CSV record on commas. Quoting is not supported; the formats
/// handled here are purely numeric.
std::vector<std::string_view> split_csv(std::string_view line);

} // namespace nlsd::io
