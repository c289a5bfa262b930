#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/jsonl.hpp"
#include "aqua/manifest.hpp"
#include "aqua/opinion.hpp"
#include "aqua/records.hpp"
#include "aqua/stats.hpp"
#include "aqua/surrogate.hpp"

namespace aqua {

struct CorrelationRow {
    std::string label;  // distortion kind, or "all" for the pooled row
    std::size_t n = 0;
    double rho = 0.0;
    bool degenerate = false;
};

// Spearman between a quality score and the anchor classifier's correct-class
// confidence, one row per distortion kind present plus the pooled "all" row.
inline std::vector<CorrelationRow> correlation_report(
    const DatasetManifest& manifest, const std::map<std::string, double>& quality,
    const RecordStore& records, const std::string& anchor_classifier) {
    std::map<DistortionKind, std::pair<std::vector<double>, std::vector<double>>> groups;
    std::vector<double> all_q, all_c;
    for (const auto& entry : manifest.entries) {
        auto it = quality.find(entry.id);
        require(it != quality.end(), ErrorCategory::state,
                "correlation_report: no quality score for '" + entry.id + "'");
        const ClassifierRecord& rec = records.get(entry.id, anchor_classifier);
        require(rec.true_class.has_value(), ErrorCategory::validation,
                "correlation_report: record for '" + entry.id + "' lacks true_class");
        const double c = ccc(rec.probs, *rec.true_class);
        auto& [qs, cs] = groups[entry.distortion.kind];
        qs.push_back(it->second);
        cs.push_back(c);
        all_q.push_back(it->second);
        all_c.push_back(c);
    }
    std::vector<CorrelationRow> rows;
    auto push_row = [&rows](const std::string& label, const std::vector<double>& qs,
                            const std::vector<double>& cs) {
        // Rows too small for a rank correlation are reported as degenerate
        // so a sparse split never aborts the whole report.
        if (qs.size() < 3) {
            rows.push_back({label, qs.size(), 0.0, true});
            return;
        }
        const SpearmanResult r = spearman(qs, cs);
        rows.push_back({label, qs.size(), r.rho, r.degenerate});
    };
    for (DistortionKind kind : kDistortionKinds) {
        auto it = groups.find(kind);
        if (it != groups.end()) push_row(kind_name(kind), it->second.first, it->second.second);
    }
    if (auto it = groups.find(DistortionKind::none); it != groups.end())
        push_row(kind_name(DistortionKind::none), it->second.first, it->second.second);
    push_row("all", all_q, all_c);
    return rows;
}

struct AccuracyPoint {
    double degree = 0.0;
    std::size_t n = 0;
    double accuracy = 0.0;
};

using AccuracyCurves = std::map<DistortionKind, std::vector<AccuracyPoint>>;

// Top-k accuracy per (kind, degree) bucket, pooled over every classifier in
// the store. Membership in the top k uses the rank convention (probability
// ties resolve toward lower class indices).
inline AccuracyCurves accuracy_vs_degree(const DatasetManifest& manifest,
                                         const RecordStore& records, int top_k) {
    require(top_k >= 1, ErrorCategory::validation, "accuracy_vs_degree: top_k must be positive");
    const auto classifiers = records.classifier_names();
    require(!classifiers.empty(), ErrorCategory::validation,
            "accuracy_vs_degree: empty record store");
    std::map<DistortionKind, std::map<double, std::pair<std::size_t, std::size_t>>> buckets;
    for (const auto& entry : manifest.entries) {
        for (const auto& clf : classifiers) {
            const ClassifierRecord& rec = records.get(entry.id, clf);
            require(rec.true_class.has_value(), ErrorCategory::validation,
                    "accuracy_vs_degree: record for '" + entry.id + "' lacks true_class");
            auto& [hits, total] = buckets[entry.distortion.kind][entry.distortion.degree];
            if (ccr(rec.probs, *rec.true_class) <= top_k) ++hits;
            ++total;
        }
    }
    AccuracyCurves curves;
    for (const auto& [kind, by_degree] : buckets) {
        auto& curve = curves[kind];
        for (const auto& [degree, counts] : by_degree)
            curve.push_back({degree, counts.second,
                             static_cast<double>(counts.first) /
                                 static_cast<double>(counts.second)});
    }
    return curves;
}

// LabeledScore items for ROC/confusion work: quality plus whether the anchor
// classifier's top-1 prediction was right.
inline std::vector<LabeledScore> labeled_scores(const DatasetManifest& manifest,
                                                const std::map<std::string, double>& quality,
                                                const RecordStore& records,
                                                const std::string& anchor_classifier) {
    std::vector<LabeledScore> items;
    items.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries) {
        auto it = quality.find(entry.id);
        require(it != quality.end(), ErrorCategory::state,
                "labeled_scores: no quality score for '" + entry.id + "'");
        items.push_back(
            {entry.id, it->second, classifier_correct(records.get(entry.id, anchor_classifier))});
    }
    return items;
}

namespace detail {

// Fixed-width decimal for table cells; files that must roundtrip use JSON
// serialization instead.
inline std::string fmt_double(double v, int precision = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

}  // namespace detail

inline std::string format_correlation_table(const std::vector<CorrelationRow>& rows) {
    std::size_t label_w = 4;
    for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(label_w) + 2) << "kind" << std::right
       << std::setw(8) << "n" << std::setw(10) << "rho" << "\n";
    for (const auto& r : rows) {
        os << std::left << std::setw(static_cast<int>(label_w) + 2) << r.label << std::right
           << std::setw(8) << r.n << std::setw(10) << detail::fmt_double(r.rho);
        if (r.degenerate) os << "  (degenerate)";
        os << "\n";
    }
    return os.str();
}

inline void save_report(const std::vector<CorrelationRow>& correlation,
                        const RocCurve* roc, const AccuracyCurves* accuracy,
                        const std::string& path,
                        jsonl::json extra_header = jsonl::json::object()) {
    jsonl::Writer w(path);
    jsonl::json header{{"format", "aqua-report"}, {"version", 1}};
    for (auto& [k, v] : extra_header.items()) header[k] = v;
    w.write(header);
    for (const auto& r : correlation)
        w.write({{"section", "correlation"},
                 {"kind", r.label},
                 {"n", r.n},
                 {"rho", r.rho},
                 {"degenerate", r.degenerate}});
    if (roc) w.write({{"section", "roc"}, {"auc", roc->auc}, {"points", roc->points.size()}});
    if (accuracy)
        for (const auto& [kind, curve] : *accuracy)
            for (const auto& p : curve)
                w.write({{"section", "accuracy"},
                         {"kind", kind_name(kind)},
                         {"degree", p.degree},
                         {"n", p.n},
                         {"accuracy", p.accuracy}});
}

// CSV for external plotting. The sentinel threshold of the all-fail point
// serializes as "inf".
inline void save_roc_csv(const RocCurve& curve, const std::string& path) {
    std::ostringstream os;
    os << "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) {
        if (std::isinf(p.threshold))
            os << (p.threshold > 0 ? "inf" : "-inf");
        else
            os << jsonl::json(p.threshold).dump();
        os << "," << jsonl::json(p.fpr).dump() << "," << jsonl::json(p.tpr).dump() << "\n";
    }
    write_text_file(path, os.str());
}

}  // namespace aqua
