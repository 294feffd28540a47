#include "stylebalance/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "stylebalance/error.hpp"

namespace stylebalance {

Image::Image(int width, int height, float fill)
    : width_(width), height_(height),
      samples_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)) * 3, fill) {}

Image::Image(int width, int height, std::vector<float> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
    if (samples_.size() != pixel_count() * 3) {
        throw Error("raster sample count does not match " + std::to_string(width) + "x" + std::to_string(height));
    }
}

Image uniform_image(int width, int height, const Rgb& color) {
    Image image(width, height);
    auto s = image.samples();
    for (std::size_t i = 0; i < s.size(); i += 3) {
        s[i] = static_cast<float>(color[0]);
        s[i + 1] = static_cast<float>(color[1]);
        s[i + 2] = static_cast<float>(color[2]);
    }
    return image;
}

Rgb mean_rgb(const Image& image) {
    Rgb sum{};
    const auto s = image.samples();
    for (std::size_t i = 0; i < s.size(); i += 3) {
        sum[0] += s[i];
        sum[1] += s[i + 1];
        sum[2] += s[i + 2];
    }
    const double n = static_cast<double>(image.pixel_count());
    if (n == 0) return sum;
    return {sum[0] / n, sum[1] / n, sum[2] / n};
}

std::vector<double> luminance_grid(const Image& image, int cols, int rows) {
    cols = std::min(cols, image.width());
    rows = std::min(rows, image.height());
    std::vector<double> grid(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), 0.0);
    std::vector<double> weight(grid.size(), 0.0);
    for (int y = 0; y < image.height(); ++y) {
        const int gy = static_cast<int>(static_cast<long long>(y) * rows / image.height());
        for (int x = 0; x < image.width(); ++x) {
            const int gx = static_cast<int>(static_cast<long long>(x) * cols / image.width());
            const double lum = 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);
            const auto cell = static_cast<std::size_t>(gy) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(gx);
            grid[cell] += lum;
            weight[cell] += 1.0;
        }
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (weight[i] > 0) grid[i] /= weight[i];
    }
    return grid;
}

Image read_image(const std::filesystem::path& path) {
    const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw IoError("cannot read image '" + path.string() + "'");
    Image image(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            image.at(x, y, 0) = static_cast<float>(row[x][2]) / 255.0f;
            image.at(x, y, 1) = static_cast<float>(row[x][1]) / 255.0f;
            image.at(x, y, 2) = static_cast<float>(row[x][0]) / 255.0f;
        }
    }
    return image;
}

namespace {

unsigned char to_byte(float v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

void write_image(const Image& image, const std::filesystem::path& path) {
    cv::Mat bgr(image.height(), image.width(), CV_8UC3);
    for (int y = 0; y < image.height(); ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width(); ++x) {
            row[x][2] = to_byte(image.at(x, y, 0));
            row[x][1] = to_byte(image.at(x, y, 1));
            row[x][0] = to_byte(image.at(x, y, 2));
        }
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), bgr);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write image '" + path.string() + "': " + e.what());
    }
    if (!ok) throw IoError("cannot write image '" + path.string() + "'");
}

Image quantize8(const Image& image) {
    Image out = image;
    for (float& v : out.samples()) v = static_cast<float>(to_byte(v)) / 255.0f;
    return out;
}

}  // namespace stylebalance
