#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace aqua::rng {

// Stateless splitmix64 finalizer. All randomness in the library flows through
// this one mixer so that seeded runs replay bit-exactly across platforms.
inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Combine a seed with a stream component; chainable.
inline constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t component) {
    return mix64(seed ^ mix64(component));
}

inline constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive(derive(seed, a), b);
}

inline constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                      std::uint64_t c) {
    return derive(derive(seed, a, b), c);
}

// FNV-1a, used to fold identifiers into seed derivations.
inline constexpr std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char ch : s) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ull;
    }
    return h;
}

// Deterministic generator: a splitmix64 walk from a derived key. Streams keyed
// per entity (pixel, entry, layer) make parallel generation order-independent.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGamma;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform double in [0,1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo,hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Unbiased integer in [0,n) by rejection.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = -n % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller; spare value cached.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] avoids log(0).
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = next_double();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Unit-scale Laplacian via inverse CDF.
    double next_laplacian() {
        double u = next_double() - 0.5;
        double a = 1.0 - 2.0 * std::abs(u);
        if (a <= 0.0) a = 0x1.0p-53;
        return (u < 0.0 ? 1.0 : -1.0) * std::log(a);
    }

    // Knuth's product-of-uniforms algorithm; adequate for the photon budgets
    // used here (lambda <= 255).
    std::uint64_t next_poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double product = next_double();
        while (product > limit) {
            ++k;
            product *= next_double();
        }
        return k;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace aqua::rng
