#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "maphdr/errors.hpp"

namespace maphdr {

// Dense row-major image with interleaved channels.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c, T fill = T{})
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    T& at(int x, int y, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    T at(int x, int y, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
    bool same_dims(const Image& other) const {
        return width == other.width && height == other.height &&
               channels == other.channels;
    }
};

// Linear radiance map (per-pixel irradiance estimate, linear units).
using IrradianceFrame = Image<double>;

// Integer-code frame as captured: values in [0, Z_max] with its exposure time.
struct LdrFrame {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<int> data; // row-major, interleaved
    double exposure_s = 0.0;

    int at(int x, int y, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    int& at(int x, int y, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// Throws DataError unless the frame's shape, code range, and exposure are valid.
inline void validate_frame(const LdrFrame& f, int z_max) {
    if (f.width <= 0 || f.height <= 0 || (f.channels != 1 && f.channels != 3))
        throw DataError("frame dimensions invalid");
    if (f.data.size() != f.pixel_count() * f.channels)
        throw DataError("frame data length does not match dimensions");
    if (f.exposure_s <= 0.0)
        throw DataError("frame exposure must be positive");
    for (int v : f.data)
        if (v < 0 || v > z_max)
            throw DataError("frame code outside [0, Z_max]");
}

constexpr double kLumaR = 0.2126;
constexpr double kLumaG = 0.7152;
constexpr double kLumaB = 0.0722;

// Rec. 709 luminance; single-channel input passes through unchanged.
inline Image<double> luminance(const Image<double>& img) {
    if (img.channels == 1) return img;
    Image<double> out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = kLumaR * img.at(x, y, 0) + kLumaG * img.at(x, y, 1) +
                           kLumaB * img.at(x, y, 2);
    return out;
}

template <typename T>
inline bool all_finite(const Image<T>& img) {
    for (T v : img.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

} // namespace maphdr
