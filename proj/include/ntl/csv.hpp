#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ntl::csv {

/// Splits `content` into lines, tolerating CRLF and a trailing newline.
std::vector<std::string_view> lines(std::string_view content);

/// Splits one record on commas; honours double-quoted fields.
std::vector<std::string> split(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::optional<double> parse_double(std::string_view text);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace ntl::csv
