#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/image.hpp"
#include "aqua/rng.hpp"

namespace aqua {

enum class DistortionKind {
    brightness,
    contrast,
    motion_blur,
    compression,
    defocus_blur,
    gaussian_noise,
    lowlight_noise,
    none,
};

inline constexpr std::array<DistortionKind, 7> kDistortionKinds = {
    DistortionKind::brightness,    DistortionKind::contrast,       DistortionKind::motion_blur,
    DistortionKind::compression,   DistortionKind::defocus_blur,   DistortionKind::gaussian_noise,
    DistortionKind::lowlight_noise,
};

inline const char* kind_name(DistortionKind k) {
    switch (k) {
        case DistortionKind::brightness: return "brightness";
        case DistortionKind::contrast: return "contrast";
        case DistortionKind::motion_blur: return "motion_blur";
        case DistortionKind::compression: return "compression";
        case DistortionKind::defocus_blur: return "defocus_blur";
        case DistortionKind::gaussian_noise: return "gaussian_noise";
        case DistortionKind::lowlight_noise: return "lowlight_noise";
        case DistortionKind::none: return "none";
    }
    return "unknown";
}

inline DistortionKind kind_from_name(std::string_view name) {
    for (DistortionKind k : kDistortionKinds)
        if (name == kind_name(k)) return k;
    if (name == "none") return DistortionKind::none;
    raise(ErrorCategory::parse, "unknown distortion kind: " + std::string(name));
}

struct DegreeRange {
    double lo;
    double hi;
};

inline DegreeRange degree_range(DistortionKind k) {
    switch (k) {
        case DistortionKind::brightness: return {0.1, 5.0};
        case DistortionKind::contrast: return {0.1, 5.0};
        case DistortionKind::motion_blur: return {5.0, 30.0};
        case DistortionKind::compression: return {20.0, 50.0};
        case DistortionKind::defocus_blur: return {1.0, 20.0};
        case DistortionKind::gaussian_noise: return {0.05, 0.5};
        case DistortionKind::lowlight_noise: return {1.0, 100.0};
        case DistortionKind::none: break;
    }
    raise(ErrorCategory::validation, "kind 'none' has no degree range");
}

// One distortion instance: a kind at one sampled severity, with the seed that
// makes any stochastic synthesis replayable.
struct DistortionSpec {
    DistortionKind kind = DistortionKind::none;
    double degree = 0.0;
    std::uint64_t seed = 0;

    static DistortionSpec none() { return {}; }
};

inline void validate(const DistortionSpec& spec) {
    if (spec.kind == DistortionKind::none) return;  // degree ignored
    const DegreeRange r = degree_range(spec.kind);
    if (!(spec.degree >= r.lo && spec.degree <= r.hi)) {
        raise(ErrorCategory::validation,
              std::string(kind_name(spec.kind)) + " degree " + std::to_string(spec.degree) +
                  " outside [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
    }
}

namespace detail {

inline ImageBuffer scale_brightness(const ImageBuffer& img, double factor) {
    ImageBuffer out = img;
    for (double& v : out.data) v = clamp01(v * factor);
    return out;
}

inline ImageBuffer scale_contrast(const ImageBuffer& img, double factor) {
    ImageBuffer out = img;
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    for (int c = 0; c < img.channels; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) mean += img.data[i * img.channels + c];
        mean /= static_cast<double>(pixels);
        for (std::size_t i = 0; i < pixels; ++i) {
            double& v = out.data[i * img.channels + c];
            v = clamp01(mean + factor * (v - mean));
        }
    }
    return out;
}

// Horizontal unit-sum line kernel of ceil(length) taps, replicate borders.
inline ImageBuffer motion_blur(const ImageBuffer& img, double length) {
    const int taps = static_cast<int>(std::ceil(length));
    if (taps <= 1) return img;
    const int anchor = (taps - 1) / 2;
    const double weight = 1.0 / taps;
    ImageBuffer out = ImageBuffer::make(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int t = 0; t < taps; ++t)
                    acc += img.at(clamp_coord(x + t - anchor, img.width), y, c);
                out.at(x, y, c) = clamp01(acc * weight);
            }
    return out;
}

inline ImageBuffer defocus_blur(const ImageBuffer& img, double radius) {
    const int half = static_cast<int>(std::ceil(radius));
    const int side = 2 * half + 1;
    std::vector<double> taps(static_cast<std::size_t>(side) * side, 0.0);
    double sum = 0.0;
    for (int ky = -half; ky <= half; ++ky)
        for (int kx = -half; kx <= half; ++kx)
            if (kx * kx + ky * ky <= radius * radius) {
                taps[static_cast<std::size_t>(ky + half) * side + (kx + half)] = 1.0;
                sum += 1.0;
            }
    for (double& t : taps) t /= sum;
    return convolve2d(img, Kernel2D::make(side, std::move(taps)));
}

// IJG Annex K luminance quantization table.
inline constexpr std::array<int, 64> kLumaQuantBase = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

inline std::array<int, 64> scaled_quant_table(double quality) {
    const double scale = quality < 50.0 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    std::array<int, 64> table{};
    for (int i = 0; i < 64; ++i) {
        int q = static_cast<int>((kLumaQuantBase[i] * scale + 50.0) / 100.0);
        table[i] = std::clamp(q, 1, 255);
    }
    return table;
}

// Block-DCT quantization roundtrip on the luma plane; chroma (the per-channel
// offsets from luma) passes through untouched.
inline ImageBuffer compression_artifact(const ImageBuffer& img, double quality) {
    const auto quant = scaled_quant_table(quality);
    ImageBuffer luma = to_grayscale(img);

    const int bw = (img.width + 7) / 8;
    const int bh = (img.height + 7) / 8;
    ImageBuffer recon = ImageBuffer::make(img.width, img.height, 1);
    std::array<double, 64> block{};
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            for (int i = 0; i < 64; ++i) {
                const int x = clamp_coord(bx * 8 + i % 8, img.width);
                const int y = clamp_coord(by * 8 + i / 8, img.height);
                block[i] = luma.at(x, y) * 255.0 - 128.0;
            }
            auto coeffs = dct8x8(block);
            for (int i = 0; i < 64; ++i)
                coeffs[i] = static_cast<double>(std::llround(coeffs[i] / quant[i])) * quant[i];
            auto pixels = idct8x8(coeffs);
            for (int i = 0; i < 64; ++i) {
                const int x = bx * 8 + i % 8;
                const int y = by * 8 + i / 8;
                if (x < img.width && y < img.height)
                    recon.at(x, y) = (pixels[i] + 128.0) / 255.0;
            }
        }

    ImageBuffer out = img;
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        const double delta = recon.data[i] - luma.data[i];
        for (int c = 0; c < img.channels; ++c) {
            double& v = out.data[i * img.channels + c];
            v = clamp01(v + delta);
        }
    }
    return out;
}

// Per-sample keyed streams keep noise independent of processing order.
inline ImageBuffer gaussian_noise(const ImageBuffer& img, double sigma, std::uint64_t seed) {
    ImageBuffer out = img;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        rng::Stream stream(rng::derive(seed, i));
        out.data[i] = clamp01(out.data[i] + sigma * stream.next_gaussian());
    }
    return out;
}

// Scaled Poisson resampling: degree sets the photon budget lambda = 255/degree,
// so larger degrees starve the sensor and produce sparse, intense noise.
inline ImageBuffer lowlight_noise(const ImageBuffer& img, double degree, std::uint64_t seed) {
    const double lambda = 255.0 / degree;
    ImageBuffer out = img;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        rng::Stream stream(rng::derive(seed, i));
        const double photons = static_cast<double>(stream.next_poisson(out.data[i] * lambda));
        out.data[i] = clamp01(photons / lambda);
    }
    return out;
}

}  // namespace detail

inline ImageBuffer apply_distortion(const ImageBuffer& img, const DistortionSpec& spec) {
    validate(spec);
    switch (spec.kind) {
        case DistortionKind::none:
            return img;
        case DistortionKind::brightness:
            if (spec.degree == 1.0) return img;
            return detail::scale_brightness(img, spec.degree);
        case DistortionKind::contrast:
            if (spec.degree == 1.0) return img;
            return detail::scale_contrast(img, spec.degree);
        case DistortionKind::motion_blur:
            return detail::motion_blur(img, spec.degree);
        case DistortionKind::compression:
            return detail::compression_artifact(img, spec.degree);
        case DistortionKind::defocus_blur:
            return detail::defocus_blur(img, spec.degree);
        case DistortionKind::gaussian_noise:
            return detail::gaussian_noise(img, spec.degree, spec.seed);
        case DistortionKind::lowlight_noise:
            return detail::lowlight_noise(img, spec.degree, spec.seed);
    }
    raise(ErrorCategory::validation, "unhandled distortion kind");
}

// Uniformly sampled degrees from the kind's range, sorted ascending.
inline std::vector<double> sample_degrees(DistortionKind kind, int count, std::uint64_t corpus_seed) {
    require(kind != DistortionKind::none, ErrorCategory::validation,
            "cannot sample degrees for kind 'none'");
    require(count >= 1, ErrorCategory::validation, "degree count must be positive");
    const DegreeRange r = degree_range(kind);
    rng::Stream stream(rng::derive(corpus_seed, rng::hash_str("degrees"),
                                   rng::hash_str(kind_name(kind))));
    std::vector<double> degrees(static_cast<std::size_t>(count));
    for (double& d : degrees) d = stream.next_in(r.lo, r.hi);
    std::sort(degrees.begin(), degrees.end());
    return degrees;
}

}  // namespace aqua
