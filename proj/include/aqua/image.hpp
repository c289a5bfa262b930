#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "aqua/error.hpp"

namespace aqua {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Planar raster of samples in [0,1], row-major, channel-interleaved.
// Immutable by convention once built: all operations return new buffers.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    static ImageBuffer make(int width, int height, int channels, double fill = 0.0) {
        require(width > 0 && height > 0, ErrorCategory::dimension, "image dimensions must be positive");
        require(channels == 1 || channels == 3, ErrorCategory::dimension, "channels must be 1 or 3");
        ImageBuffer img;
        img.width = width;
        img.height = height;
        img.channels = channels;
        img.data.assign(static_cast<std::size_t>(width) * height * channels, fill);
        return img;
    }

    std::size_t size() const { return data.size(); }

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }

    double at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
    double& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }

    bool same_shape(const ImageBuffer& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }
};

struct Kernel2D {
    int size = 0;  // odd side length
    std::vector<double> taps;

    static Kernel2D make(int size, std::vector<double> taps) {
        require(size >= 1 && size % 2 == 1, ErrorCategory::validation, "kernel side must be odd and positive");
        require(taps.size() == static_cast<std::size_t>(size) * size, ErrorCategory::validation,
                "tap count must equal size^2");
        Kernel2D k;
        k.size = size;
        k.taps = std::move(taps);
        return k;
    }

    double tap(int kx, int ky) const { return taps[static_cast<std::size_t>(ky) * size + kx]; }
};

// BT.601 luma; 1-channel input passes through unchanged.
inline ImageBuffer to_grayscale(const ImageBuffer& img) {
    if (img.channels == 1) return img;
    require(img.channels == 3, ErrorCategory::dimension, "to_grayscale expects 1 or 3 channels");
    ImageBuffer out = ImageBuffer::make(img.width, img.height, 1);
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        const double* p = &img.data[i * 3];
        out.data[i] = clamp01(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
    return out;
}

namespace detail {

inline int clamp_coord(int v, int hi) { return v < 0 ? 0 : (v >= hi ? hi - 1 : v); }

// Correlation-style sliding window with replicate borders, unclamped output.
// Exposed for the linearity property and for feature extraction, where
// responses are pooled rather than rendered.
inline ImageBuffer convolve2d_unclamped(const ImageBuffer& img, const Kernel2D& k) {
    require(k.size <= std::min(img.width, img.height), ErrorCategory::dimension,
            "kernel larger than image");
    ImageBuffer out = ImageBuffer::make(img.width, img.height, img.channels);
    const int half = k.size / 2;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int ky = 0; ky < k.size; ++ky) {
                    const int sy = clamp_coord(y + ky - half, img.height);
                    for (int kx = 0; kx < k.size; ++kx) {
                        const int sx = clamp_coord(x + kx - half, img.width);
                        acc += k.tap(kx, ky) * img.at(sx, sy, c);
                    }
                }
                out.at(x, y, c) = acc;
            }
        }
    }
    return out;
}

}  // namespace detail

inline ImageBuffer convolve2d(const ImageBuffer& img, const Kernel2D& k) {
    ImageBuffer out = detail::convolve2d_unclamped(img, k);
    for (double& v : out.data) v = clamp01(v);
    return out;
}

// Orthonormal 2-D DCT-II on an 8x8 block (and its inverse). A constant block
// of value v transforms to a DC coefficient of 8v with zero AC energy.
namespace detail {

struct DctTable {
    std::array<double, 64> c{};  // c[u*8+x] = s(u) * cos((2x+1) u pi / 16)
    DctTable() {
        for (int u = 0; u < 8; ++u) {
            const double s = (u == 0) ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x)
                c[static_cast<std::size_t>(u) * 8 + x] = s * std::cos((2 * x + 1) * u * M_PI / 16.0);
        }
    }
};

inline const DctTable& dct_table() {
    static const DctTable table;
    return table;
}

}  // namespace detail

inline std::array<double, 64> dct8x8(const std::array<double, 64>& block) {
    const auto& t = detail::dct_table().c;
    std::array<double, 64> rows{};
    for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
            double acc = 0.0;
            for (int x = 0; x < 8; ++x) acc += t[u * 8 + x] * block[y * 8 + x];
            rows[y * 8 + u] = acc;
        }
    std::array<double, 64> out{};
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y) acc += t[v * 8 + y] * rows[y * 8 + u];
            out[v * 8 + u] = acc;
        }
    return out;
}

inline std::array<double, 64> idct8x8(const std::array<double, 64>& coeffs) {
    const auto& t = detail::dct_table().c;
    std::array<double, 64> rows{};
    for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) acc += t[u * 8 + x] * coeffs[v * 8 + u];
            rows[v * 8 + x] = acc;
        }
    std::array<double, 64> out{};
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int v = 0; v < 8; ++v) acc += t[v * 8 + y] * rows[v * 8 + x];
            out[y * 8 + x] = acc;
        }
    return out;
}

// Peak signal-to-noise ratio against peak 1.0; +infinity marks identical images.
inline double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    require(a.same_shape(b), ErrorCategory::dimension, "psnr inputs must share dimensions");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        sq += d * d;
    }
    const double mse = sq / static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

// 2x2 box average; trailing odd row/column dropped.
inline ImageBuffer box_downsample2x(const ImageBuffer& img) {
    const int w = img.width / 2;
    const int h = img.height / 2;
    require(w >= 1 && h >= 1, ErrorCategory::dimension, "image too small to downsample");
    ImageBuffer out = ImageBuffer::make(w, h, img.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = 0.25 * (img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                                          img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c));
    return out;
}

}  // namespace aqua
