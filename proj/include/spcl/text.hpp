#pragma once

#include <charconv>
#include <string>

namespace spcl {

/// Shortest decimal string that parses back to the same double; keeps every
/// emitted file byte-deterministic.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace spcl
