#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtrack::csv {

// Minimal CSV for the toolkit's own files: comma separated, no quoting, since
// identifiers are opaque tokens without commas.
std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::vector<std::string_view> lines(std::string_view text);

std::string_view trim(std::string_view s);

std::optional<long long> parse_int(std::string_view s);
std::optional<double> parse_double(std::string_view s);

// Shortest round-trippable representation (17 significant digits max).
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

std::string join(const std::vector<std::string>& fields, char sep = ',');

} // namespace mtrack::csv
