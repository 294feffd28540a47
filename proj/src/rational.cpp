#include "stylebalance/rational.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "stylebalance/error.hpp"

namespace stylebalance {

namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError("not a fraction: '" + std::string(whole) + "'");
    }
    return value;
}

Ratio reduce(std::int64_t num, std::int64_t den) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return {num, den};
}

}  // namespace

double Ratio::value() const noexcept {
    if (is_infinite()) return std::numeric_limits<double>::infinity();
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string Ratio::str() const {
    if (is_infinite()) return "inf";
    const std::int64_t g = std::gcd(num, den);
    const std::int64_t n = g > 1 ? num / g : num;
    const std::int64_t d = g > 1 ? den / g : den;
    if (d == 1) return std::to_string(n);
    return std::to_string(n) + "/" + std::to_string(d);
}

bool operator==(const Ratio& a, const Ratio& b) noexcept {
    if (a.is_infinite() || b.is_infinite()) return a.is_infinite() == b.is_infinite();
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
}

bool operator<(const Ratio& a, const Ratio& b) noexcept {
    if (a.is_infinite()) return false;
    if (b.is_infinite()) return true;
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

Ratio parse_ratio(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (text == "inf") return {1, 0};
    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
        const auto num = parse_int(text.substr(0, slash), text);
        const auto den = parse_int(text.substr(slash + 1), text);
        if (den == 0) throw ConfigError("zero denominator in '" + std::string(text) + "'");
        return reduce(num, den);
    }
    if (const auto dot = text.find('.'); dot != std::string_view::npos) {
        const auto int_part = text.substr(0, dot);
        const auto frac_part = text.substr(dot + 1);
        if (frac_part.size() > 15 || frac_part.empty()) {
            throw ConfigError("not a fraction: '" + std::string(text) + "'");
        }
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac_part.size(); ++i) den *= 10;
        const bool negative = !int_part.empty() && int_part.front() == '-';
        const std::int64_t whole = int_part.empty() || int_part == "-" ? 0 : parse_int(int_part, text);
        const std::int64_t frac = parse_int(frac_part, text);
        const std::int64_t num = negative ? whole * den - frac : whole * den + frac;
        return reduce(num, den);
    }
    return {parse_int(text, text), 1};
}

std::int64_t round_half_up(std::int64_t n, const Ratio& r) {
    // floor((2 n num + den) / (2 den)), exact for non-negative operands.
    const __int128 twice = static_cast<__int128>(2) * n * r.num + r.den;
    return static_cast<std::int64_t>(twice / (static_cast<__int128>(2) * r.den));
}

}  // namespace stylebalance
