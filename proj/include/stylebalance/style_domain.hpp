#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylebalance/dataset.hpp"
#include "stylebalance/image.hpp"

namespace stylebalance {

// Opponent color space: intensity, red-green, yellow-blue.
//   I = (R + G + B) / 3,  RG = R - G,  YB = (R + G) / 2 - B
Rgb to_opponent(const Rgb& rgb) noexcept;
Rgb from_opponent(const Rgb& opp) noexcept;

std::vector<std::string> default_domains();  // green, blue, deepblue, white

struct DomainAnchor {
    std::string domain;
    Rgb mean;  // opponent space
    double tolerance = 0.1;

    static DomainAnchor from_rgb(std::string domain, const Rgb& rgb, double tolerance);
};

std::vector<DomainAnchor> default_anchors();

/// Anchor file: one `domain: r g b tolerance` line per domain, RGB in [0,1].
/// Blank lines and `#` comments are ignored. Throws ConfigError.
std::vector<DomainAnchor> parse_anchor_config(std::string_view text);
std::string format_anchor_config(std::span<const DomainAnchor> anchors);

/// Override file: one `image_id<TAB>domain` line per image.
std::map<std::string, std::string> parse_domain_overrides(std::string_view text);

struct StyleClassification {
    std::string domain;
    double distance = 0.0;
    bool within_tolerance = false;
};

/// Nearest anchor to the image's mean opponent color; ties go to the earlier anchor.
StyleClassification classify_style(const Image& image, std::span<const DomainAnchor> anchors);

struct DomainPool {
    std::vector<std::string> domains;
    std::vector<std::vector<std::string>> pools;  // parallel to domains
    std::map<std::string, std::string> assignments;

    const std::vector<std::string>& pool(std::string_view domain) const;
    std::size_t min_pool_size() const noexcept;

    friend bool operator==(const DomainPool&, const DomainPool&) = default;
};

using ImageLoader = std::function<Image(const ImageRecord&)>;

/// Classifies every record (overrides win) and writes the result into
/// ImageRecord::domain. Loader failures are rethrown as IoError naming the record.
DomainPool build_domain_pools(Dataset& dataset, std::span<const DomainAnchor> anchors,
                              const ImageLoader& loader,
                              const std::map<std::string, std::string>& overrides = {});

/// Truncates every pool to the smallest pool size by seeded sampling without
/// replacement; survivors keep their relative order.
DomainPool balance_domain_pool(const DomainPool& pool, std::uint64_t seed);

}  // namespace stylebalance
