#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/image.hpp"
#include "aqua/manifest.hpp"
#include "aqua/rng.hpp"

namespace aqua {

namespace detail {

inline double lattice_value(std::uint64_t key, int i, int j) {
    const std::uint64_t cell =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
        static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
    return static_cast<double>(rng::derive(key, cell) >> 11) * 0x1.0p-53;
}

// Smoothly interpolated lattice noise in [0,1].
inline double value_noise(std::uint64_t key, double u, double v) {
    const int i = static_cast<int>(std::floor(u));
    const int j = static_cast<int>(std::floor(v));
    const double fu = u - std::floor(u);
    const double fv = v - std::floor(v);
    const double su = fu * fu * (3.0 - 2.0 * fu);
    const double sv = fv * fv * (3.0 - 2.0 * fv);
    const double a = lattice_value(key, i, j);
    const double b = lattice_value(key, i + 1, j);
    const double c = lattice_value(key, i, j + 1);
    const double d = lattice_value(key, i + 1, j + 1);
    return (a * (1.0 - su) + b * su) * (1.0 - sv) + (c * (1.0 - su) + d * su) * sv;
}

}  // namespace detail

// Procedural RGB texture: multi-octave value noise, an optional sinusoidal
// grating, a few soft blobs, and a seeded dark-to-bright palette. Parameters
// vary per seed so a corpus spans smooth and busy content.
inline ImageBuffer make_texture(int width, int height, std::uint64_t seed) {
    require(width >= 1 && height >= 1, ErrorCategory::validation, "texture size must be positive");
    rng::Stream ps(rng::derive(seed, rng::hash_str("params")));
    const int octaves = 3 + static_cast<int>(ps.next_below(3));
    const double base_cell = ps.next_in(6.0, 24.0);
    const double gain = ps.next_in(0.45, 0.65);
    const bool grating = ps.next_double() < 0.5;
    const double g_amp = grating ? ps.next_in(0.05, 0.25) : 0.0;
    const double g_fx = ps.next_in(-0.15, 0.15);
    const double g_fy = ps.next_in(-0.15, 0.15);
    const double g_phase = ps.next_in(0.0, 6.283185307179586);
    const int blobs = static_cast<int>(ps.next_below(4));
    struct Blob {
        double cx, cy, sigma, amp;
    };
    std::vector<Blob> blob_list;
    for (int b = 0; b < blobs; ++b) {
        Blob bl;
        bl.cx = ps.next_in(0.0, static_cast<double>(width));
        bl.cy = ps.next_in(0.0, static_cast<double>(height));
        bl.sigma = ps.next_in(5.0, 20.0);
        bl.amp = ps.next_in(-0.5, 0.5);
        blob_list.push_back(bl);
    }
    double color_a[3], color_b[3];
    for (int c = 0; c < 3; ++c) color_a[c] = ps.next_in(0.02, 0.35);
    for (int c = 0; c < 3; ++c) color_b[c] = ps.next_in(0.65, 0.98);
    // One palette channel stays below every brightness clip point (degree <=
    // 5 clips at 0.2), so no in-range distortion can flatten a texture into a
    // constant frame, which would make its scene statistics degenerate.
    color_a[ps.next_below(3)] = ps.next_in(0.02, 0.15);

    std::vector<double> field(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double v = 0.0, weight = 0.0, cell = base_cell, g = 1.0;
            for (int o = 0; o < octaves; ++o) {
                const std::uint64_t key = rng::derive(seed, rng::hash_str("octave"),
                                                      static_cast<std::uint64_t>(o));
                v += g * detail::value_noise(key, x / cell, y / cell);
                weight += g;
                cell = std::max(1.0, cell * 0.5);
                g *= gain;
            }
            v /= weight;
            for (const Blob& bl : blob_list) {
                const double dx = x - bl.cx, dy = y - bl.cy;
                v += bl.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * bl.sigma * bl.sigma));
            }
            if (grating) v += g_amp * std::sin(6.283185307179586 * (g_fx * x + g_fy * y) + g_phase);
            field[static_cast<std::size_t>(y) * width + x] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double span = hi - lo > 1e-12 ? hi - lo : 1.0;

    ImageBuffer img = ImageBuffer::make(width, height, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double t = (field[static_cast<std::size_t>(y) * width + x] - lo) / span;
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = clamp01(color_a[c] + (color_b[c] - color_a[c]) * t);
        }
    return img;
}

struct TextureCorpus {
    std::vector<CleanImage> clean;
    std::map<std::string, ImageBuffer> images;
};

// count seeded textures with ids tex-0000, tex-0001, ... Per-image seeds
// derive from the corpus seed, so corpora with different seeds share nothing.
inline TextureCorpus make_texture_corpus(int count, int width, int height, std::uint64_t seed) {
    require(count >= 1, ErrorCategory::validation, "texture corpus needs a positive count");
    TextureCorpus corpus;
    for (int i = 0; i < count; ++i) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "tex-%04d", i);
        CleanImage ci;
        ci.image_id = buf;
        corpus.images[ci.image_id] = make_texture(
            width, height, rng::derive(seed, rng::hash_str("texture"), static_cast<std::uint64_t>(i)));
        corpus.clean.push_back(std::move(ci));
    }
    return corpus;
}

}  // namespace aqua
