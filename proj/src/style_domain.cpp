#include "stylebalance/style_domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "stylebalance/error.hpp"

namespace stylebalance {

Rgb to_opponent(const Rgb& c) noexcept {
    return {(c[0] + c[1] + c[2]) / 3.0, c[0] - c[1], (c[0] + c[1]) / 2.0 - c[2]};
}

Rgb from_opponent(const Rgb& o) noexcept {
    return {o[0] + o[1] / 2.0 + o[2] / 3.0, o[0] - o[1] / 2.0 + o[2] / 3.0, o[0] - 2.0 * o[2] / 3.0};
}

std::vector<std::string> default_domains() { return {"green", "blue", "deepblue", "white"}; }

DomainAnchor DomainAnchor::from_rgb(std::string domain, const Rgb& rgb, double tolerance) {
    return {std::move(domain), to_opponent(rgb), tolerance};
}

std::vector<DomainAnchor> default_anchors() {
    // Calibrated on typical URPC frames: yellow-green turbid water, mid blue
    // water, dark saturated blue, and pale low-chroma scenes.
    return {
        DomainAnchor::from_rgb("green", {0.30, 0.50, 0.30}, 0.15),
        DomainAnchor::from_rgb("blue", {0.15, 0.40, 0.60}, 0.15),
        DomainAnchor::from_rgb("deepblue", {0.05, 0.15, 0.40}, 0.15),
        DomainAnchor::from_rgb("white", {0.70, 0.75, 0.75}, 0.15),
    };
}

std::vector<DomainAnchor> parse_anchor_config(std::string_view text) {
    std::vector<DomainAnchor> anchors;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("anchor line " + std::to_string(line_no) + ": expected 'domain: r g b tolerance'");
        }
        std::string domain = line.substr(0, colon);
        domain.erase(0, domain.find_first_not_of(" \t"));
        domain.erase(domain.find_last_not_of(" \t") + 1);
        std::istringstream values(line.substr(colon + 1));
        Rgb rgb{};
        double tolerance = 0;
        std::string extra;
        if (domain.empty() || !(values >> rgb[0] >> rgb[1] >> rgb[2] >> tolerance) || (values >> extra)) {
            throw ConfigError("anchor line " + std::to_string(line_no) + ": expected 'domain: r g b tolerance'");
        }
        if (!(tolerance > 0)) throw ConfigError("anchor '" + domain + "': tolerance must be positive");
        anchors.push_back(DomainAnchor::from_rgb(domain, rgb, tolerance));
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (!names.insert(anchors[i].domain).second) {
            throw ConfigError("duplicate anchor for domain '" + anchors[i].domain + "'");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (anchors[i].mean == anchors[j].mean) {
                throw ConfigError("anchors '" + anchors[j].domain + "' and '" + anchors[i].domain + "' coincide");
            }
        }
    }
    if (anchors.empty()) throw ConfigError("anchor config defines no domains");
    return anchors;
}

std::string format_anchor_config(std::span<const DomainAnchor> anchors) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& a : anchors) {
        const Rgb rgb = from_opponent(a.mean);
        out << a.domain << ": " << rgb[0] << ' ' << rgb[1] << ' ' << rgb[2] << ' ' << a.tolerance << '\n';
    }
    return out.str();
}

std::map<std::string, std::string> parse_domain_overrides(std::string_view text) {
    std::map<std::string, std::string> overrides;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
            throw ConfigError("override line " + std::to_string(line_no) + ": expected 'image_id<TAB>domain'");
        }
        overrides[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return overrides;
}

StyleClassification classify_style(const Image& image, std::span<const DomainAnchor> anchors) {
    if (image.empty()) throw Error("cannot classify an empty image");
    if (anchors.empty()) throw ConfigError("no domain anchors configured");
    const Rgb mean = to_opponent(mean_rgb(image));
    StyleClassification best;
    double best_sq = std::numeric_limits<double>::infinity();
    for (const auto& a : anchors) {
        double sq = 0;
        for (int c = 0; c < 3; ++c) sq += (mean[c] - a.mean[c]) * (mean[c] - a.mean[c]);
        if (sq < best_sq) {
            best_sq = sq;
            best.domain = a.domain;
            best.distance = std::sqrt(sq);
            best.within_tolerance = best.distance <= a.tolerance;
        }
    }
    return best;
}

const std::vector<std::string>& DomainPool::pool(std::string_view domain) const {
    for (std::size_t i = 0; i < domains.size(); ++i) {
        if (domains[i] == domain) return pools[i];
    }
    throw Error("unknown style domain '" + std::string(domain) + "'");
}

std::size_t DomainPool::min_pool_size() const noexcept {
    std::size_t k = std::numeric_limits<std::size_t>::max();
    for (const auto& p : pools) k = std::min(k, p.size());
    return pools.empty() ? 0 : k;
}

DomainPool build_domain_pools(Dataset& dataset, std::span<const DomainAnchor> anchors, const ImageLoader& loader,
                              const std::map<std::string, std::string>& overrides) {
    DomainPool pool;
    for (const auto& a : anchors) pool.domains.push_back(a.domain);
    pool.pools.resize(pool.domains.size());

    const auto slot = [&](const std::string& domain) -> std::size_t {
        const auto it = std::find(pool.domains.begin(), pool.domains.end(), domain);
        if (it == pool.domains.end()) throw ConfigError("override names unknown domain '" + domain + "'");
        return static_cast<std::size_t>(it - pool.domains.begin());
    };

    for (auto& record : dataset.records) {
        std::string domain;
        if (const auto it = overrides.find(record.id); it != overrides.end()) {
            domain = it->second;
        } else {
            Image image;
            try {
                image = loader(record);
            } catch (const std::exception& e) {
                throw IoError("record '" + record.id + "': " + e.what());
            }
            domain = classify_style(image, anchors).domain;
        }
        pool.pools[slot(domain)].push_back(record.id);
        pool.assignments[record.id] = domain;
        record.domain = domain;
    }
    return pool;
}

DomainPool balance_domain_pool(const DomainPool& pool, std::uint64_t seed) {
    const std::size_t k = pool.min_pool_size();
    DomainPool out;
    out.domains = pool.domains;
    std::mt19937_64 rng(seed);
    for (std::size_t d = 0; d < pool.pools.size(); ++d) {
        const auto& ids = pool.pools[d];
        std::vector<std::string> kept;
        kept.reserve(k);
        // Selection sampling (Knuth's algorithm S) keeps the input order.
        std::size_t needed = k;
        for (std::size_t i = 0; i < ids.size() && needed > 0; ++i) {
            const std::size_t remaining = ids.size() - i;
            if (rng() % remaining < needed) {
                kept.push_back(ids[i]);
                --needed;
            }
        }
        for (const auto& id : kept) out.assignments[id] = pool.domains[d];
        out.pools.push_back(std::move(kept));
    }
    return out;
}

}  // namespace stylebalance
