#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/records.hpp"

namespace aqua {

// Correct-class confidence: the probability assigned to the true class.
inline double ccc(const std::vector<double>& probs, int true_class) {
    require(!probs.empty(), ErrorCategory::validation, "ccc: empty probability vector");
    require(true_class >= 0 && true_class < static_cast<int>(probs.size()),
            ErrorCategory::validation, "ccc: true_class out of range");
    return probs[static_cast<std::size_t>(true_class)];
}

// Correct-class rank, 1-based, descending by probability. Ties resolve to the
// lower index, so the true class is ranked behind any equal-probability class
// that precedes it and ahead of any that follows.
inline int ccr(const std::vector<double>& probs, int true_class) {
    require(!probs.empty(), ErrorCategory::validation, "ccr: empty probability vector");
    require(true_class >= 0 && true_class < static_cast<int>(probs.size()),
            ErrorCategory::validation, "ccr: true_class out of range");
    const double pt = probs[static_cast<std::size_t>(true_class)];
    int rank = 1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        if (i == true_class) continue;
        double pi = probs[static_cast<std::size_t>(i)];
        if (pi > pt || (pi == pt && i < true_class)) ++rank;
    }
    return rank;
}

// Normalized complement of the rank: 1 - 1/N when ranked first, 0 when last.
inline double nccr(const std::vector<double>& probs, int true_class) {
    const int n = static_cast<int>(probs.size());
    return static_cast<double>(n - ccr(probs, true_class)) / static_cast<double>(n);
}

struct OpinionWeights {
    double w_ccc = 1.0;
    double w_nccr = 1.0;
};

// Supervised classifier-opinion score for one classifier: how much confidence
// plus rank the distortion cost it. Positive when the distorted image is
// judged worse.
inline double cos_supervised(const std::vector<double>& probs_org,
                             const std::vector<double>& probs_dist,
                             int true_class,
                             const OpinionWeights& w = {}) {
    require(probs_org.size() == probs_dist.size(), ErrorCategory::dimension,
            "cos_supervised: probability vectors differ in length");
    const double org = w.w_ccc * ccc(probs_org, true_class) + w.w_nccr * nccr(probs_org, true_class);
    const double dist = w.w_ccc * ccc(probs_dist, true_class) + w.w_nccr * nccr(probs_dist, true_class);
    return org - dist;
}

// Mean classifier-opinion score over a bank of classifiers. Each pair is the
// (original, distorted) softmax from one classifier.
struct OpinionPair {
    std::vector<double> probs_org;
    std::vector<double> probs_dist;
    int true_class = 0;
};

inline double mcos(const std::vector<OpinionPair>& bank, const OpinionWeights& w = {}) {
    require(!bank.empty(), ErrorCategory::validation, "mcos: empty classifier bank");
    double sum = 0.0;
    for (const auto& pair : bank)
        sum += cos_supervised(pair.probs_org, pair.probs_dist, pair.true_class, w);
    return sum / static_cast<double>(bank.size());
}

// Distance functions between softmax distributions, for the self-supervised
// variant that needs no labels.
enum class DistanceKind { MAD, KL, JS, L1, L2, Bhattacharyya };

constexpr std::array<DistanceKind, 6> kDistanceKinds = {
    DistanceKind::MAD, DistanceKind::KL, DistanceKind::JS,
    DistanceKind::L1,  DistanceKind::L2, DistanceKind::Bhattacharyya,
};

inline const char* distance_name(DistanceKind k) {
    switch (k) {
        case DistanceKind::MAD: return "mad";
        case DistanceKind::KL: return "kl";
        case DistanceKind::JS: return "js";
        case DistanceKind::L1: return "l1";
        case DistanceKind::L2: return "l2";
        case DistanceKind::Bhattacharyya: return "bhattacharyya";
    }
    raise(ErrorCategory::validation, "unknown distance kind");
}

inline DistanceKind distance_from_name(const std::string& name) {
    for (DistanceKind k : kDistanceKinds)
        if (name == distance_name(k)) return k;
    raise(ErrorCategory::validation, "unknown distance '" + name + "'");
}

namespace detail {

constexpr double kDistEps = 1e-10;

// KL(p || q) with q smoothed so zero entries cannot blow up: q is mixed with
// epsilon mass and renormalized. Terms with p_i = 0 contribute nothing.
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    const double n = static_cast<double>(p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        const double qi = (q[i] + kDistEps) / (1.0 + n * kDistEps);
        sum += p[i] * std::log(p[i] / qi);
    }
    return sum;
}

}  // namespace detail

inline double distance(const std::vector<double>& p, const std::vector<double>& q,
                       DistanceKind kind) {
    require(!p.empty(), ErrorCategory::validation, "distance: empty distribution");
    require(p.size() == q.size(), ErrorCategory::dimension,
            "distance: distributions differ in length");
    const std::size_t n = p.size();
    switch (kind) {
        case DistanceKind::MAD: {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += std::abs(p[i] - q[i]);
            return sum / static_cast<double>(n);
        }
        case DistanceKind::L1: {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += std::abs(p[i] - q[i]);
            return sum;
        }
        case DistanceKind::L2: {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += (p[i] - q[i]) * (p[i] - q[i]);
            return std::sqrt(sum);
        }
        case DistanceKind::KL:
            return detail::kl_divergence(p, q);
        case DistanceKind::JS: {
            std::vector<double> m(n);
            for (std::size_t i = 0; i < n; ++i) m[i] = 0.5 * (p[i] + q[i]);
            return 0.5 * detail::kl_divergence(p, m) + 0.5 * detail::kl_divergence(q, m);
        }
        case DistanceKind::Bhattacharyya: {
            double bc = 0.0;
            for (std::size_t i = 0; i < n; ++i) bc += std::sqrt(p[i] * q[i]);
            return -std::log(std::max(bc, detail::kDistEps));
        }
    }
    raise(ErrorCategory::validation, "unknown distance kind");
}

// Self-supervised variant: mean softmax distance over the bank, no labels.
inline double mcos_ss(const std::vector<OpinionPair>& bank, DistanceKind kind) {
    require(!bank.empty(), ErrorCategory::validation, "mcos_ss: empty classifier bank");
    double sum = 0.0;
    for (const auto& pair : bank) {
        require(pair.probs_org.size() == pair.probs_dist.size(), ErrorCategory::dimension,
                "mcos_ss: probability vectors differ in length");
        sum += distance(pair.probs_org, pair.probs_dist, kind);
    }
    return sum / static_cast<double>(bank.size());
}

}  // namespace aqua
