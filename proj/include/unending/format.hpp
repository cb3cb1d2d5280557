#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace unending {

/// Shortest text that reads back to the same double; empty for NaN.
inline std::string format_double(double v) {
    if (std::isnan(v)) return {};
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace unending
