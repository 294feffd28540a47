#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace stylebalance {

// Non-negative fraction with exact comparison. A zero denominator means +infinity,
// which is what max/min yields when some class has no instances.
struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;

    bool is_infinite() const noexcept { return den == 0; }
    double value() const noexcept;
    std::string str() const;

    friend bool operator==(const Ratio& a, const Ratio& b) noexcept;
    friend bool operator<(const Ratio& a, const Ratio& b) noexcept;
    friend bool operator<=(const Ratio& a, const Ratio& b) noexcept { return !(b < a); }
    friend bool operator>(const Ratio& a, const Ratio& b) noexcept { return b < a; }
    friend bool operator>=(const Ratio& a, const Ratio& b) noexcept { return !(a < b); }
};

/// Parses "0.25", "898/2897" or "1". Throws ConfigError on anything else.
Ratio parse_ratio(std::string_view text);

// round(n * r) with halves rounded up; r must be finite.
std::int64_t round_half_up(std::int64_t n, const Ratio& r);

}  // namespace stylebalance
