#pragma once

// Synthetic images and datasets shared by the test suites.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "stylebalance/config.hpp"
#include "stylebalance/dataset.hpp"
#include "stylebalance/image.hpp"
#include "stylebalance/style_domain.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using stylebalance::Image;
using stylebalance::Rgb;

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("stylebalance-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const fs::path& p) const { return path_ / p; }

private:
    fs::path path_;
};

inline Image noisy_uniform(int w, int h, const Rgb& color, double amplitude, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> noise(-amplitude, amplitude);
    Image image(w, h);
    for (float& v : image.samples()) v = 0.0f;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) image.at(x, y, c) = static_cast<float>(color[c] + noise(rng));
        }
    }
    return image;
}

// Base color plus a smooth luminance pattern and mild noise. Samples stay
// within base +- (amplitude + noise).
inline Image structured_image(int w, int h, const Rgb& base, double amplitude, std::mt19937_64& rng,
                              double noise = 0.01) {
    std::uniform_real_distribution<double> phase(0.0, 6.28);
    std::uniform_real_distribution<double> jitter(-noise, noise);
    const double px = phase(rng), py = phase(rng);
    Image image(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double pattern = 0.6 * std::sin(px + 6.0 * x / w) * std::cos(py + 4.0 * y / h) +
                                   0.4 * (2.0 * x / std::max(1, w - 1) - 1.0);
            for (int c = 0; c < 3; ++c) {
                image.at(x, y, c) = static_cast<float>(base[c] + amplitude * pattern * (0.8 + 0.1 * c) + jitter(rng));
            }
        }
    }
    return image;
}

inline void paint_box(Image& image, const stylebalance::BoundingBox& b, double delta) {
    for (int y = b.ymin; y < b.ymax; ++y) {
        for (int x = b.xmin; x < b.xmax; ++x) {
            for (int c = 0; c < 3; ++c) {
                image.at(x, y, c) = static_cast<float>(std::clamp(image.at(x, y, c) + delta, 0.0, 1.0));
            }
        }
    }
}

// Base colors that classify into the default anchors while leaving headroom
// for stat transfer to stay inside [0,1].
inline Rgb domain_base(const std::string& domain) {
    if (domain == "green") return {0.32, 0.50, 0.32};
    if (domain == "blue") return {0.18, 0.40, 0.58};
    if (domain == "deepblue") return {0.12, 0.20, 0.42};
    return {0.66, 0.72, 0.72};
}

struct FixtureImage {
    std::string id;
    std::string domain;
    std::vector<std::pair<std::string, int>> objects;  // label, count
};

// Writes images/<id>.png, annotations/<id>.xml and manifest.txt under root.
inline stylebalance::Dataset write_fixture(const fs::path& root, const std::vector<FixtureImage>& spec,
                                           std::uint64_t seed, int w = 48, int h = 36) {
    std::mt19937_64 rng(seed);
    stylebalance::Dataset dataset{{}, stylebalance::Vocabulary::urpc()};
    for (const auto& fi : spec) {
        Image image = structured_image(w, h, domain_base(fi.domain), 0.06, rng);
        stylebalance::ImageRecord record;
        record.id = fi.id;
        record.image_path = fs::path("images") / (fi.id + ".png");
        record.width = w;
        record.height = h;
        int slot = 0;
        for (const auto& [label, count] : fi.objects) {
            for (int k = 0; k < count; ++k, ++slot) {
                const int bx = (slot * 11) % (w - 8);
                const int by = (slot * 7) % (h - 8);
                stylebalance::BoundingBox box{bx, by, bx + 6 + slot % 3, by + 5 + slot % 2};
                paint_box(image, box, (slot % 2 == 0) ? 0.05 : -0.05);
                record.objects.push_back({label, box});
            }
        }
        stylebalance::write_image(image, root / record.image_path);
        dataset.records.push_back(std::move(record));
    }
    stylebalance::write_dataset_annotations(dataset, root, "manifest.txt");
    return dataset;
}

// ~200 images over four domains with class counts seaurchin 400, starfish 250,
// scallop 80, seacucumber 60. 40 images carry the minority classes (plus one
// starfish each), the rest carry only majority classes.
inline std::vector<FixtureImage> imbalanced_spec() {
    const std::vector<std::string> domains = stylebalance::default_domains();
    std::vector<FixtureImage> spec;
    for (int i = 0; i < 40; ++i) {
        FixtureImage fi;
        fi.id = "m" + std::string(i < 10 ? "0" : "") + std::to_string(i);
        fi.domain = domains[static_cast<std::size_t>(i) % 4];
        fi.objects = {{"scallop", 2}, {"seacucumber", i < 20 ? 1 : 2}, {"starfish", 1}};
        spec.push_back(fi);
    }
    // 160 majority images: 400 seaurchin, 210 starfish.
    for (int i = 0; i < 160; ++i) {
        FixtureImage fi;
        fi.id = "j" + std::string(i < 10 ? "00" : (i < 100 ? "0" : "")) + std::to_string(i);
        fi.domain = domains[static_cast<std::size_t>(i) % 4];
        const int urchins = i < 80 ? 3 : 2;    // 240 + 160 = 400
        const int stars = i < 50 ? 2 : 1;      // 100 + 110 = 210
        fi.objects = {{"seaurchin", urchins}, {"starfish", stars}};
        spec.push_back(fi);
    }
    return spec;
}

inline std::string config_text(const fs::path& root, const std::string& extra = {}) {
    return "dataset_root = " + (root / "data").string() + "\n" + "manifest = manifest.txt\n" +
           "work_dir = " + (root / "work").string() + "\n" + "out_dir = " + (root / "out").string() + "\n" +
           "seed = 7\n" + extra;
}

}  // namespace fixtures
