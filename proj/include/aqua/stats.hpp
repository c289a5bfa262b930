#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "aqua/error.hpp"

namespace aqua {

// Average ranks (1-based); tied values share the mean of their rank span.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

struct SpearmanResult {
    double rho = 0.0;
    bool degenerate = false;  // zero variance in either argument
};

// Spearman rank correlation: Pearson on average ranks. Degenerate inputs
// report 0 with the flag set so batch reports never abort.
inline SpearmanResult spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    require(xs.size() == ys.size(), ErrorCategory::dimension,
            "spearman: sequences differ in length");
    require(xs.size() >= 3, ErrorCategory::validation, "spearman: need at least 3 points");
    for (double v : xs)
        require(std::isfinite(v), ErrorCategory::validation, "spearman: non-finite value");
    for (double v : ys)
        require(std::isfinite(v), ErrorCategory::validation, "spearman: non-finite value");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return {0.0, true};
    double rho = sxy / std::sqrt(sxx * syy);
    rho = std::clamp(rho, -1.0, 1.0);
    return {rho, false};
}

struct LabeledScore {
    std::string image_id;
    double quality_score = 0.0;
    bool classifier_correct = false;
};

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
};

// Quadrant counts at one threshold. Pass rule: quality_score >= threshold
// (boundary passes). Positive class: classifier correct.
inline Confusion confusion(const std::vector<LabeledScore>& items, double threshold) {
    Confusion c;
    for (const auto& item : items) {
        require(std::isfinite(item.quality_score), ErrorCategory::validation,
                "confusion: non-finite score");
        const bool pass = item.quality_score >= threshold;
        if (item.classifier_correct)
            pass ? ++c.tp : ++c.fn;
        else
            pass ? ++c.fp : ++c.tn;
    }
    return c;
}

// Threshold sweep over the distinct scores, descending, plus sentinel
// endpoints so the curve spans (0,0) to (1,1). AUC by trapezoid.
inline RocCurve roc_auc(const std::vector<LabeledScore>& items) {
    require(!items.empty(), ErrorCategory::validation, "roc_auc: no items");
    std::size_t pos = 0, neg = 0;
    for (const auto& item : items) {
        require(std::isfinite(item.quality_score), ErrorCategory::validation,
                "roc_auc: non-finite score");
        item.classifier_correct ? ++pos : ++neg;
    }
    require(pos > 0 && neg > 0, ErrorCategory::validation,
            "roc_auc: need both a positive and a negative item");

    std::vector<double> thresholds;
    thresholds.reserve(items.size());
    for (const auto& item : items) thresholds.push_back(item.quality_score);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    RocCurve curve;
    const double inf = std::numeric_limits<double>::infinity();
    curve.points.push_back({inf, 0.0, 0.0});  // nothing passes
    for (double t : thresholds) {
        const Confusion c = confusion(items, t);
        curve.points.push_back({t,
                                static_cast<double>(c.fp) / static_cast<double>(neg),
                                static_cast<double>(c.tp) / static_cast<double>(pos)});
    }
    double auc = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    curve.auc = auc;
    return curve;
}

}  // namespace aqua
