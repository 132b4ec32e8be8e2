#include "scenfuse/numfmt.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <system_error>

#include "scenfuse/common.hpp"

namespace scenfuse {

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double value, int decimals) {
    char buf[512];
    int n = std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    if (n < 0 || n >= static_cast<int>(sizeof(buf))) {
        fail_validation("FormatOverflow", "value does not fit fixed-point buffer");
    }
    // snprintf %f is locale-independent for the C locale; we never call setlocale.
    return std::string(buf, static_cast<size_t>(n));
}

std::string_view trim(std::string_view text) {
    size_t b = 0;
    size_t e = text.size();
    while (b < e && (text[b] == ' ' || text[b] == '\t' || text[b] == '\r' || text[b] == '\n')) ++b;
    while (e > b && (text[e - 1] == ' ' || text[e - 1] == '\t' || text[e - 1] == '\r' || text[e - 1] == '\n')) --e;
    return text.substr(b, e - b);
}

std::optional<double> parse_double(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    double out = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    if (!std::isfinite(out)) return std::nullopt;
    return out;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    std::int64_t out = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return out;
}

double require_double(std::string_view text, std::string_view what) {
    auto v = parse_double(text);
    if (!v) fail_parse("TypeMismatch", std::string(what) + ": not a number: '" + std::string(text) + "'");
    return *v;
}

std::int64_t require_int(std::string_view text, std::string_view what) {
    auto v = parse_int(text);
    if (!v) fail_parse("TypeMismatch", std::string(what) + ": not an integer: '" + std::string(text) + "'");
    return *v;
}

}  // namespace scenfuse
