#pragma once

#include <charconv>
#include <string>

namespace rocod {

// Shortest round-trip decimal form; keeps emitted CSVs byte-stable across
// runs and thread counts.
inline void append_double(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    out.append(buf, ptr);
}

inline std::string format_double(double v) {
    std::string out;
    append_double(out, v);
    return out;
}

} // namespace rocod
