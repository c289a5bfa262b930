#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/jsonl.hpp"
#include "aqua/manifest.hpp"
#include "aqua/opinion.hpp"
#include "aqua/records.hpp"
#include "aqua/stats.hpp"

namespace aqua {

// Bank of (original, distorted) softmax pairs for one manifest entry, one
// pair per classifier in the store. Classifier order is the store's sorted
// name order, so banks are deterministic.
inline std::vector<OpinionPair> build_pairs(const DatasetManifest& manifest,
                                            const RecordStore& store,
                                            const ManifestEntry& entry) {
    const std::string clean_id = manifest.clean_id_of(entry);
    std::vector<OpinionPair> bank;
    for (const auto& clf : store.classifier_names()) {
        const ClassifierRecord& org = store.get(clean_id, clf);
        const ClassifierRecord& dist = store.get(entry.id, clf);
        require(org.n() == dist.n(), ErrorCategory::dimension,
                "records for '" + entry.id + "' and its original differ in class count");
        OpinionPair pair;
        pair.probs_org = org.probs;
        pair.probs_dist = dist.probs;
        pair.true_class = org.true_class.value_or(-1);
        bank.push_back(std::move(pair));
    }
    require(!bank.empty(), ErrorCategory::state, "no classifiers in record store");
    return bank;
}

enum class TargetMode { supervised, semi_supervised };

inline const char* target_mode_name(TargetMode m) {
    return m == TargetMode::supervised ? "supervised" : "semi_supervised";
}

inline TargetMode target_mode_from_name(const std::string& name) {
    if (name == "supervised") return TargetMode::supervised;
    if (name == "semi_supervised") return TargetMode::semi_supervised;
    raise(ErrorCategory::validation, "unknown target mode '" + name + "'");
}

struct TargetRecord {
    std::string id;
    double target = 0.0;
};

// Opinion-score target for one entry. Clean entries score 0 by definition:
// the pair (original, original) has zero difference under every variant.
inline double entry_target(const DatasetManifest& manifest, const RecordStore& store,
                           const ManifestEntry& entry, TargetMode mode,
                           DistanceKind kind = DistanceKind::MAD,
                           const OpinionWeights& weights = {}) {
    if (entry.is_clean()) return 0.0;
    auto bank = build_pairs(manifest, store, entry);
    if (mode == TargetMode::semi_supervised) return mcos_ss(bank, kind);
    for (auto& pair : bank)
        require(pair.true_class >= 0, ErrorCategory::validation,
                "supervised targets need true_class in the records");
    return mcos(bank, weights);
}

inline std::vector<TargetRecord> label_targets(const DatasetManifest& manifest,
                                               const RecordStore& store, TargetMode mode,
                                               DistanceKind kind = DistanceKind::MAD,
                                               const OpinionWeights& weights = {}) {
    std::vector<TargetRecord> out;
    out.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries)
        out.push_back({entry.id, entry_target(manifest, store, entry, mode, kind, weights)});
    return out;
}

// Shared shape of the target and score files: a header plus {id, <value>}
// lines in input order.
inline void save_id_values(const std::vector<TargetRecord>& values, const std::string& path,
                           const std::string& format, const std::string& value_key,
                           jsonl::json extra_header = jsonl::json::object()) {
    jsonl::Writer w(path);
    jsonl::json header{{"format", format}, {"version", 1}};
    for (auto& [k, v] : extra_header.items()) header[k] = v;
    w.write(header);
    for (const auto& t : values) w.write({{"id", t.id}, {value_key, t.target}});
}

inline std::map<std::string, double> load_id_values(const std::string& path,
                                                    const std::string& format,
                                                    const std::string& value_key) {
    auto doc = jsonl::read_file(path, format, 1);
    return jsonl::decode(path, [&] {
        std::map<std::string, double> out;
        for (const auto& j : doc.records) {
            const auto id = j.at("id").get<std::string>();
            require(!out.count(id), ErrorCategory::parse, path + ": duplicate id '" + id + "'");
            const double v = j.at(value_key).get<double>();
            require(std::isfinite(v), ErrorCategory::parse,
                    path + ": non-finite value for '" + id + "'");
            out[id] = v;
        }
        return out;
    });
}

inline void save_targets(const std::vector<TargetRecord>& targets, const std::string& path,
                         jsonl::json extra_header = jsonl::json::object()) {
    save_id_values(targets, path, "aqua-targets", "target", std::move(extra_header));
}

inline std::map<std::string, double> load_targets(const std::string& path) {
    return load_id_values(path, "aqua-targets", "target");
}

inline void save_scores(const std::vector<TargetRecord>& scores, const std::string& path,
                        jsonl::json extra_header = jsonl::json::object()) {
    save_id_values(scores, path, "aqua-scores", "quality", std::move(extra_header));
}

inline std::map<std::string, double> load_scores(const std::string& path) {
    return load_id_values(path, "aqua-scores", "quality");
}

struct DistanceSelection {
    struct Row {
        DistanceKind kind;
        // One ρ(degree, MCOS_SS) per distortion type present in the manifest.
        std::map<DistortionKind, double> rho;
        double mean_abs_rho = 0.0;
    };
    DistanceKind selected = DistanceKind::MAD;
    std::vector<Row> rows;  // one per DistanceKind, enumeration order
};

// Which softmax distance tracks distortion degree best: per distance kind,
// Spearman between degree and MCOS_SS within each distortion type, mean |ρ|
// across types, argmax with ties broken toward the first enumerated kind.
inline DistanceSelection select_distance(const DatasetManifest& manifest,
                                         const RecordStore& store) {
    std::map<DistortionKind, std::vector<const ManifestEntry*>> by_kind;
    for (const auto& entry : manifest.entries)
        if (!entry.is_clean()) by_kind[entry.distortion.kind].push_back(&entry);
    require(!by_kind.empty(), ErrorCategory::validation,
            "select_distance: manifest has no distorted entries");
    for (const auto& [kind, entries] : by_kind) {
        std::set<double> degrees;
        for (const auto* e : entries) degrees.insert(e->distortion.degree);
        require(degrees.size() >= 2, ErrorCategory::validation,
                std::string("select_distance: need at least 2 degrees for ") + kind_name(kind));
    }

    DistanceSelection sel;
    double best = -1.0;
    for (DistanceKind dk : kDistanceKinds) {
        DistanceSelection::Row row;
        row.kind = dk;
        double sum_abs = 0.0;
        for (DistortionKind kind : kDistortionKinds) {
            auto it = by_kind.find(kind);
            if (it == by_kind.end()) continue;
            std::vector<double> degrees, scores;
            for (const auto* e : it->second) {
                degrees.push_back(e->distortion.degree);
                scores.push_back(mcos_ss(build_pairs(manifest, store, *e), dk));
            }
            const double rho = spearman(degrees, scores).rho;
            row.rho[kind] = rho;
            sum_abs += std::abs(rho);
        }
        row.mean_abs_rho = sum_abs / static_cast<double>(row.rho.size());
        if (row.mean_abs_rho > best) {
            best = row.mean_abs_rho;
            sel.selected = dk;
        }
        sel.rows.push_back(std::move(row));
    }
    return sel;
}

}  // namespace aqua
