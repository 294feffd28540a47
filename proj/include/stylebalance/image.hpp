#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace stylebalance {

using Rgb = std::array<double, 3>;

// Interleaved RGB raster with samples normalized to [0,1].
class Image {
public:
    Image() = default;
    Image(int width, int height, float fill = 0.0f);
    Image(int width, int height, std::vector<float> samples);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return samples_.empty(); }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    float& at(int x, int y, int c) noexcept { return samples_[index(x, y, c)]; }
    float at(int x, int y, int c) const noexcept { return samples_[index(x, y, c)]; }

    std::span<float> samples() noexcept { return samples_; }
    std::span<const float> samples() const noexcept { return samples_; }

    bool same_shape(const Image& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> samples_;
};

Image uniform_image(int width, int height, const Rgb& color);

Rgb mean_rgb(const Image& image);

// Box-filter downsample onto a cols x rows grid of per-cell mean luminance
// (Rec. 601 weights). Cells map to pixel ranges by integer partition.
std::vector<double> luminance_grid(const Image& image, int cols, int rows);

// PNG/JPEG at 8 bits per channel. Throws IoError.
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

// Quantize to 8 bits and back, the same rounding write_image applies.
Image quantize8(const Image& image);

}  // namespace stylebalance
