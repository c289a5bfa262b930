#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/image.hpp"
#include "aqua/jsonl.hpp"
#include "aqua/rng.hpp"

namespace aqua {

struct FeatureVector {
    std::string image_id;
    std::string extractor_id;
    std::vector<double> values;
};

namespace detail {

// 1-D taps of the 7x7 Gaussian window (sigma 7/6), normalized. The 2-D
// window is the separable product, so filtering runs as two 1-D passes.
inline const std::array<double, 7>& gaussian7() {
    static const std::array<double, 7> taps = [] {
        std::array<double, 7> t{};
        const double sigma = 7.0 / 6.0;
        double sum = 0.0;
        for (int i = 0; i < 7; ++i) {
            const double x = static_cast<double>(i - 3);
            t[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * sigma * sigma));
            sum += t[static_cast<std::size_t>(i)];
        }
        for (double& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// Separable 7-tap smoothing with replicate borders.
inline ImageBuffer smooth7(const ImageBuffer& img) {
    const auto& g = gaussian7();
    ImageBuffer tmp = ImageBuffer::make(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int k = -3; k <= 3; ++k)
                acc += g[static_cast<std::size_t>(k + 3)] *
                       img.at(clamp_coord(x + k, img.width), y, 0);
            tmp.at(x, y, 0) = acc;
        }
    ImageBuffer out = ImageBuffer::make(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int k = -3; k <= 3; ++k)
                acc += g[static_cast<std::size_t>(k + 3)] *
                       tmp.at(x, clamp_coord(y + k, img.height), 0);
            out.at(x, y, 0) = acc;
        }
    return out;
}

}  // namespace detail

// Mean-subtracted contrast-normalized coefficients: (I - mu) / (sigma + C)
// with mu, sigma from the 7x7 Gaussian window and C = 1/255.
inline ImageBuffer mscn(const ImageBuffer& img) {
    require(img.channels == 1, ErrorCategory::validation, "mscn: grayscale input required");
    require(std::min(img.width, img.height) >= 16, ErrorCategory::validation,
            "mscn: image smaller than 16 pixels per side");
    const double C = 1.0 / 255.0;
    ImageBuffer sq = ImageBuffer::make(img.width, img.height, 1);
    for (std::size_t i = 0; i < img.data.size(); ++i) sq.data[i] = img.data[i] * img.data[i];
    const ImageBuffer mu = detail::smooth7(img);
    const ImageBuffer musq = detail::smooth7(sq);
    ImageBuffer out = ImageBuffer::make(img.width, img.height, 1);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double var = std::max(0.0, musq.data[i] - mu.data[i] * mu.data[i]);
        out.data[i] = (img.data[i] - mu.data[i]) / (std::sqrt(var) + C);
    }
    return out;
}

namespace detail {

// Moment ratio r(alpha) = Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a)), strictly
// increasing on the solver interval.
inline double ggd_moment_ratio(double alpha) {
    return std::exp(2.0 * std::lgamma(2.0 / alpha) - std::lgamma(1.0 / alpha) -
                    std::lgamma(3.0 / alpha));
}

// Solve r(alpha) = rho by bisection on [0.05, 10]; out-of-range targets
// clamp to the interval endpoints.
inline double solve_ggd_alpha(double rho) {
    double lo = 0.05, hi = 10.0;
    if (rho <= ggd_moment_ratio(lo)) return lo;
    if (rho >= ggd_moment_ratio(hi)) return hi;
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        (ggd_moment_ratio(mid) < rho ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

struct GgdFit {
    double alpha = 0.0;
    double sigma = 0.0;  // sqrt of the second moment
};

inline GgdFit fit_ggd(const std::vector<double>& samples) {
    require(samples.size() >= 100, ErrorCategory::validation, "fit_ggd: need at least 100 samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0, mean_abs = 0.0, mean_sq = 0.0;
    for (double x : samples) {
        require(std::isfinite(x), ErrorCategory::validation, "fit_ggd: non-finite sample");
        mean += x;
        mean_abs += std::abs(x);
        mean_sq += x * x;
    }
    mean /= n;
    mean_abs /= n;
    mean_sq /= n;
    require(mean_sq - mean * mean > 0.0, ErrorCategory::numeric, "fit_ggd: zero-variance samples");
    const double rho = (mean_abs * mean_abs) / mean_sq;
    return {detail::solve_ggd_alpha(rho), std::sqrt(mean_sq)};
}

struct AggdFit {
    double alpha = 0.0;
    double eta = 0.0;  // mean of the fitted density
    double sigma_l = 0.0;
    double sigma_r = 0.0;
};

// Asymmetric fit: side scales from the one-sided second moments, shape from
// the moment ratio corrected by the side imbalance. An empty side's scale is
// floored at 1e-6 rather than erroring.
inline AggdFit fit_aggd(const std::vector<double>& samples) {
    require(samples.size() >= 100, ErrorCategory::validation, "fit_aggd: need at least 100 samples");
    const double n = static_cast<double>(samples.size());
    double mean_abs = 0.0, mean_sq = 0.0;
    double sq_l = 0.0, sq_r = 0.0;
    std::size_t n_l = 0, n_r = 0;
    for (double x : samples) {
        require(std::isfinite(x), ErrorCategory::validation, "fit_aggd: non-finite sample");
        mean_abs += std::abs(x);
        mean_sq += x * x;
        if (x < 0.0) {
            sq_l += x * x;
            ++n_l;
        } else if (x > 0.0) {
            sq_r += x * x;
            ++n_r;
        }
    }
    mean_abs /= n;
    mean_sq /= n;
    require(mean_sq > 0.0, ErrorCategory::numeric, "fit_aggd: all samples zero");
    AggdFit fit;
    fit.sigma_l = n_l > 0 ? std::sqrt(sq_l / static_cast<double>(n_l)) : 1e-6;
    fit.sigma_r = n_r > 0 ? std::sqrt(sq_r / static_cast<double>(n_r)) : 1e-6;
    const double gamma = fit.sigma_l / fit.sigma_r;
    const double rho = (mean_abs * mean_abs) / mean_sq;
    const double corrected = rho * (gamma * gamma * gamma + 1.0) * (gamma + 1.0) /
                             ((gamma * gamma + 1.0) * (gamma * gamma + 1.0));
    fit.alpha = detail::solve_ggd_alpha(corrected);
    const double a = fit.alpha;
    const double mean_factor = std::exp(std::lgamma(2.0 / a) - std::lgamma(1.0 / a)) *
                               std::exp(0.5 * (std::lgamma(1.0 / a) - std::lgamma(3.0 / a)));
    fit.eta = (fit.sigma_r - fit.sigma_l) * mean_factor;
    return fit;
}

namespace detail {

enum class Orientation { H, V, D1, D2 };

inline std::vector<double> pairwise_products(const ImageBuffer& m, Orientation o) {
    std::vector<double> out;
    const int w = m.width, h = m.height;
    switch (o) {
        case Orientation::H:
            out.reserve(static_cast<std::size_t>(h) * static_cast<std::size_t>(w - 1));
            for (int y = 0; y < h; ++y)
                for (int x = 0; x + 1 < w; ++x) out.push_back(m.at(x, y, 0) * m.at(x + 1, y, 0));
            break;
        case Orientation::V:
            out.reserve(static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(w));
            for (int y = 0; y + 1 < h; ++y)
                for (int x = 0; x < w; ++x) out.push_back(m.at(x, y, 0) * m.at(x, y + 1, 0));
            break;
        case Orientation::D1:
            for (int y = 0; y + 1 < h; ++y)
                for (int x = 0; x + 1 < w; ++x)
                    out.push_back(m.at(x, y, 0) * m.at(x + 1, y + 1, 0));
            break;
        case Orientation::D2:
            for (int y = 0; y + 1 < h; ++y)
                for (int x = 1; x < w; ++x) out.push_back(m.at(x, y, 0) * m.at(x - 1, y + 1, 0));
            break;
    }
    return out;
}

// 18 entries per scale: GGD (alpha, sigma^2) of the MSCN map, then AGGD
// (alpha, eta, sigma_l^2, sigma_r^2) for orientations H, V, D1, D2.
inline void nss_scale_features(const ImageBuffer& gray, std::vector<double>& out) {
    const ImageBuffer m = mscn(gray);
    const GgdFit g = fit_ggd(m.data);
    out.push_back(g.alpha);
    out.push_back(g.sigma * g.sigma);
    for (Orientation o : {Orientation::H, Orientation::V, Orientation::D1, Orientation::D2}) {
        const AggdFit a = fit_aggd(pairwise_products(m, o));
        out.push_back(a.alpha);
        out.push_back(a.eta);
        out.push_back(a.sigma_l * a.sigma_l);
        out.push_back(a.sigma_r * a.sigma_r);
    }
}

}  // namespace detail

inline constexpr const char* kNssExtractorId = "nss-v1";
inline constexpr int kNssDim = 36;

// 36-dim BRISQUE-style vector: 18 entries at full scale, 18 after one 2x2
// box downsample. Needs at least 32 pixels per side so both scales satisfy
// the MSCN minimum.
inline FeatureVector nss_features(const ImageBuffer& img, const std::string& image_id = {}) {
    const ImageBuffer gray = to_grayscale(img);
    FeatureVector fv;
    fv.image_id = image_id;
    fv.extractor_id = kNssExtractorId;
    fv.values.reserve(kNssDim);
    detail::nss_scale_features(gray, fv.values);
    detail::nss_scale_features(box_downsample2x(gray), fv.values);
    return fv;
}

struct FilterBankSpec {
    std::vector<int> kernel_sizes{1, 3, 5};
    int filters_per_size = 4;
    std::uint64_t seed = 0;
};

inline void validate(const FilterBankSpec& spec) {
    require(!spec.kernel_sizes.empty(), ErrorCategory::validation, "filter bank: no kernel sizes");
    for (int s : spec.kernel_sizes)
        require(s == 1 || s == 3 || s == 5, ErrorCategory::validation,
                "filter bank: kernel sizes limited to 1, 3, 5");
    require(spec.filters_per_size >= 1, ErrorCategory::validation,
            "filter bank: filters_per_size must be at least 1");
}

inline std::string filterbank_extractor_id(const FilterBankSpec& spec) {
    std::ostringstream os;
    os << "fbank-v1-k";
    for (std::size_t i = 0; i < spec.kernel_sizes.size(); ++i)
        os << (i ? "." : "") << spec.kernel_sizes[i];
    os << "-f" << spec.filters_per_size << "-s" << std::hex << spec.seed;
    return os.str();
}

namespace detail {

inline Kernel2D random_unit_filter(const FilterBankSpec& spec, int size, int index) {
    rng::Stream stream(rng::derive(spec.seed, rng::hash_str("fbank"),
                                   (static_cast<std::uint64_t>(size) << 32) |
                                       static_cast<std::uint64_t>(index)));
    std::vector<double> taps(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
    double norm = 0.0;
    for (double& t : taps) {
        t = stream.next_gaussian();
        norm += t * t;
    }
    norm = std::sqrt(norm);
    require(norm > 0.0, ErrorCategory::numeric, "filter bank: degenerate filter draw");
    for (double& t : taps) t /= norm;
    return Kernel2D::make(size, std::move(taps));
}

}  // namespace detail

// Seeded random filters at each kernel size, rectified responses pooled to
// (mean, std) per filter. Mirrors parallel multi-size convolutions without
// shipping pretrained weights.
inline FeatureVector filterbank_features(const ImageBuffer& img, const FilterBankSpec& spec,
                                         const std::string& image_id = {}) {
    validate(spec);
    const ImageBuffer gray = to_grayscale(img);
    FeatureVector fv;
    fv.image_id = image_id;
    fv.extractor_id = filterbank_extractor_id(spec);
    for (int size : spec.kernel_sizes) {
        for (int f = 0; f < spec.filters_per_size; ++f) {
            const Kernel2D k = detail::random_unit_filter(spec, size, f);
            const ImageBuffer resp = convolve2d(gray, k);
            double mean = 0.0;
            std::vector<double> rect(resp.data.size());
            for (std::size_t i = 0; i < resp.data.size(); ++i) {
                rect[i] = std::max(resp.data[i], 0.0);
                mean += rect[i];
            }
            mean /= static_cast<double>(rect.size());
            double var = 0.0;
            for (double v : rect) var += (v - mean) * (v - mean);
            var /= static_cast<double>(rect.size());
            fv.values.push_back(mean);
            fv.values.push_back(std::sqrt(var));
        }
    }
    return fv;
}

struct EmbeddingStore {
    std::string extractor_id;
    int dim = 0;
    std::map<std::string, std::vector<double>> vectors;

    const std::vector<double>& get(const std::string& image_id) const {
        auto it = vectors.find(image_id);
        require(it != vectors.end(), ErrorCategory::state,
                "missing feature vector for image '" + image_id + "'");
        return it->second;
    }
};

inline void save_embeddings(const std::vector<FeatureVector>& feats, const std::string& path,
                            jsonl::json extra_header = jsonl::json::object()) {
    require(!feats.empty(), ErrorCategory::validation, "save_embeddings: nothing to write");
    const std::string& extractor = feats.front().extractor_id;
    const std::size_t dim = feats.front().values.size();
    for (const auto& fv : feats) {
        require(fv.extractor_id == extractor, ErrorCategory::validation,
                "save_embeddings: mixed extractor ids");
        require(fv.values.size() == dim, ErrorCategory::dimension,
                "save_embeddings: ragged vector lengths");
    }
    jsonl::Writer w(path);
    jsonl::json header{{"format", "aqua-embed"},
                       {"version", 1},
                       {"extractor_id", extractor},
                       {"dim", static_cast<int>(dim)}};
    for (auto& [k, v] : extra_header.items()) header[k] = v;
    w.write(header);
    for (const auto& fv : feats) w.write({{"image_id", fv.image_id}, {"values", fv.values}});
}

inline EmbeddingStore load_embeddings(const std::string& path) {
    auto doc = jsonl::read_file(path, "aqua-embed", 1);
    return jsonl::decode(path, [&] {
        EmbeddingStore store;
        store.extractor_id = doc.header.at("extractor_id").get<std::string>();
        store.dim = doc.header.at("dim").get<int>();
        require(store.dim >= 1, ErrorCategory::parse, path + ": non-positive dim");
        for (const auto& j : doc.records) {
            const auto id = j.at("image_id").get<std::string>();
            auto values = j.at("values").get<std::vector<double>>();
            require(static_cast<int>(values.size()) == store.dim, ErrorCategory::parse,
                    path + ": ragged vector length for '" + id + "'");
            for (double v : values)
                require(std::isfinite(v), ErrorCategory::parse,
                        path + ": non-finite value in '" + id + "'");
            require(!store.vectors.count(id), ErrorCategory::parse,
                    path + ": duplicate image_id '" + id + "'");
            store.vectors[id] = std::move(values);
        }
        return store;
    });
}

}  // namespace aqua
