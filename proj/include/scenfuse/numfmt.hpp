#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scenfuse {

// Locale-independent numeric text. All file formats and CLI output go through
// these helpers so that emitted bytes are identical across platforms.

// Shortest decimal string that round-trips to the same double ("8.33" stays "8.33").
std::string format_double(double value);

// Fixed-point with the given number of decimals, correctly rounded from the
// binary value.
std::string format_fixed(double value, int decimals);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

// Strict variants raise Parse errors mentioning `what`.
double require_double(std::string_view text, std::string_view what);
std::int64_t require_int(std::string_view text, std::string_view what);

std::string_view trim(std::string_view text);

}  // namespace scenfuse
