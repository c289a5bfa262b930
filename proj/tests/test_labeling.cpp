#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <aqua/error.hpp>
#include <aqua/labeling.hpp>
#include <aqua/manifest.hpp>
#include <aqua/records.hpp>
#include <aqua/surrogate.hpp>

#include "helpers.hpp"

using namespace aqua;

namespace {

ClassifierRecord make_record(const std::string& image, const std::string& clf,
                             std::vector<double> probs, std::optional<int> true_class = {}) {
    ClassifierRecord rec;
    rec.image_id = image;
    rec.classifier_name = clf;
    rec.probs = std::move(probs);
    rec.true_class = true_class;
    return rec;
}

// Manifest with one source and the given degrees of a single kind.
DatasetManifest single_kind_manifest(DistortionKind kind, const std::vector<double>& degrees) {
    DatasetManifest manifest;
    ManifestEntry clean;
    clean.id = "src__none";
    clean.source = "src";
    clean.distortion = DistortionSpec::none();
    manifest.entries.push_back(clean);
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        ManifestEntry e;
        e.id = "src__d" + std::to_string(i);
        e.source = "src";
        e.distortion = {kind, degrees[i], 0};
        manifest.entries.push_back(e);
    }
    manifest.rebuild_clean_index();
    return manifest;
}

std::vector<CleanImage> fake_corpus(int n) {
    std::vector<CleanImage> out;
    for (int i = 0; i < n; ++i)
        out.push_back({"src" + std::to_string(i), "src" + std::to_string(i) + ".png"});
    return out;
}

// Distance formulas restated for oracle comparisons, same reduction order.
double naive_distance(const std::vector<double>& p, const std::vector<double>& q,
                      DistanceKind kind) {
    const double n = static_cast<double>(p.size());
    const double eps = 1e-10;
    auto kl = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0.0) continue;
            sum += a[i] * std::log(a[i] / ((b[i] + eps) / (1.0 + n * eps)));
        }
        return sum;
    };
    switch (kind) {
        case DistanceKind::MAD: {
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
            return s / n;
        }
        case DistanceKind::L1: {
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
            return s;
        }
        case DistanceKind::L2: {
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
            return std::sqrt(s);
        }
        case DistanceKind::KL:
            return kl(p, q);
        case DistanceKind::JS: {
            std::vector<double> m(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
            return 0.5 * kl(p, m) + 0.5 * kl(q, m);
        }
        case DistanceKind::Bhattacharyya: {
            double bc = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
            return -std::log(std::max(bc, eps));
        }
    }
    return 0.0;
}

}  // namespace

TEST_CASE("build_pairs walks classifiers in sorted order") {
    auto manifest = single_kind_manifest(DistortionKind::brightness, {2.0});
    RecordStore store;
    store.insert(make_record("src__none", "zeta", {0.7, 0.3}, 0));
    store.insert(make_record("src__d0", "zeta", {0.4, 0.6}, 0));
    store.insert(make_record("src__none", "alpha", {0.9, 0.1}, 0));
    store.insert(make_record("src__d0", "alpha", {0.5, 0.5}, 0));

    auto bank = build_pairs(manifest, store, manifest.entries[1]);
    REQUIRE(bank.size() == 2);
    CHECK(bank[0].probs_org == std::vector<double>{0.9, 0.1});  // alpha first
    CHECK(bank[0].probs_dist == std::vector<double>{0.5, 0.5});
    CHECK(bank[1].probs_org == std::vector<double>{0.7, 0.3});
    CHECK(bank[0].true_class == 0);

    RecordStore missing;
    missing.insert(make_record("src__none", "alpha", {0.9, 0.1}, 0));
    CHECK_THROWS_AS(build_pairs(manifest, missing, manifest.entries[1]), Error);

    RecordStore ragged;
    ragged.insert(make_record("src__none", "alpha", {0.9, 0.1}, 0));
    ragged.insert(make_record("src__d0", "alpha", {0.3, 0.3, 0.4}, 0));
    CHECK_THROWS_AS(build_pairs(manifest, ragged, manifest.entries[1]), Error);
}

TEST_CASE("clean entries are labeled exactly zero in both modes") {
    auto manifest = single_kind_manifest(DistortionKind::brightness, {2.0});
    RecordStore store;
    store.insert(make_record("src__none", "clf", {0.6, 0.4}, 0));
    store.insert(make_record("src__d0", "clf", {0.2, 0.8}, 0));
    CHECK(entry_target(manifest, store, manifest.entries[0], TargetMode::supervised) == 0.0);
    CHECK(entry_target(manifest, store, manifest.entries[0], TargetMode::semi_supervised) == 0.0);
}

TEST_CASE("semi-supervised targets equal the mean bank distance") {
    auto manifest = build_dataset(fake_corpus(3), DatasetOptions{}, 51);
    SurrogateClassifier proto;
    proto.decay = default_decay_map();
    auto bank = make_surrogate_bank(proto, 4, 52);
    RecordStore store;
    for (auto& rec : surrogate_records(bank, manifest)) store.insert(std::move(rec));

    auto targets = label_targets(manifest, store, TargetMode::semi_supervised, DistanceKind::JS);
    REQUIRE(targets.size() == manifest.entries.size());
    const auto names = store.classifier_names();
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& entry = manifest.entries[i];
        CHECK(targets[i].id == entry.id);
        double expected = 0.0;
        if (!entry.is_clean()) {
            const std::string clean_id = manifest.clean_id_of(entry);
            for (const auto& clf : names)
                expected += naive_distance(store.get(clean_id, clf).probs,
                                           store.get(entry.id, clf).probs, DistanceKind::JS);
            expected /= static_cast<double>(names.size());
        }
        CHECK(targets[i].target == Catch::Approx(expected).margin(1e-12));
    }
}

TEST_CASE("supervised targets need true_class") {
    auto manifest = single_kind_manifest(DistortionKind::brightness, {2.0});
    RecordStore store;
    store.insert(make_record("src__none", "clf", {0.6, 0.4}));
    store.insert(make_record("src__d0", "clf", {0.2, 0.8}));
    CHECK_THROWS_AS(entry_target(manifest, store, manifest.entries[1], TargetMode::supervised),
                    Error);
    // The same records label fine without supervision.
    CHECK_NOTHROW(entry_target(manifest, store, manifest.entries[1], TargetMode::semi_supervised));
}

TEST_CASE("supervised targets apply the opinion weights") {
    auto manifest = single_kind_manifest(DistortionKind::brightness, {2.0});
    RecordStore store;
    store.insert(make_record("src__none", "clf", {0.9, 0.1}, 0));
    store.insert(make_record("src__d0", "clf", {0.2, 0.8}, 0));
    // org: ccc 0.9, nccr 0.5; dist: ccc 0.2, nccr 0.
    const double t =
        entry_target(manifest, store, manifest.entries[1], TargetMode::supervised,
                     DistanceKind::MAD, OpinionWeights{2.0, 1.0});
    CHECK(t == Catch::Approx(2.0 * (0.9 - 0.2) + (0.5 - 0.0)).margin(1e-12));
}

TEST_CASE("target files round-trip and reject bad content") {
    testutil::TempDir dir;
    std::vector<TargetRecord> targets{{"a", 0.5}, {"b", -1.25}};
    const auto path = (dir.path() / "targets.jsonl").string();
    save_targets(targets, path, {{"mode", "semi_supervised"}});
    auto loaded = load_targets(path);
    CHECK(loaded.size() == 2);
    CHECK(loaded.at("a") == 0.5);
    CHECK(loaded.at("b") == -1.25);

    const auto dup = (dir.path() / "dup.jsonl").string();
    save_targets({{"a", 1.0}, {"a", 2.0}}, dup);
    CHECK_THROWS_AS(load_targets(dup), Error);

    const auto inf = (dir.path() / "inf.jsonl").string();
    {
        std::ofstream out(inf);
        out << R"({"format":"aqua-targets","version":1})" << "\n";
        out << R"({"id":"x","target":1e999})" << "\n";
    }
    CHECK_THROWS_AS(load_targets(inf), Error);
}

TEST_CASE("score files use the quality key") {
    testutil::TempDir dir;
    const auto path = (dir.path() / "scores.jsonl").string();
    save_scores({{"a", 0.75}}, path);
    CHECK(load_scores(path).at("a") == 0.75);
    CHECK_THROWS_AS(load_targets(path), Error);  // wrong format tag
}

TEST_CASE("select_distance prefers the distance that tracks degree monotonically") {
    // One classifier, org (0.6, 0.3, 0.1). The three distorted softmaxes are
    // chosen so KL, JS and Bhattacharyya rise strictly with degree while the
    // elementwise distances dip at the middle degree.
    auto manifest = single_kind_manifest(DistortionKind::brightness, {2.0, 3.0, 4.0});
    RecordStore store;
    store.insert(make_record("src__none", "clf", {0.6, 0.3, 0.1}));
    store.insert(make_record("src__d0", "clf", {0.5, 0.4, 0.1}));
    store.insert(make_record("src__d1", "clf", {0.6, 0.21, 0.19}));
    store.insert(make_record("src__d2", "clf", {0.4, 0.4, 0.2}));

    auto sel = select_distance(manifest, store);
    CHECK(sel.selected == DistanceKind::KL);
    REQUIRE(sel.rows.size() == kDistanceKinds.size());
    for (const auto& row : sel.rows) {
        REQUIRE(row.rho.size() == 1);
        const double rho = row.rho.at(DistortionKind::brightness);
        if (row.kind == DistanceKind::KL || row.kind == DistanceKind::JS ||
            row.kind == DistanceKind::Bhattacharyya)
            CHECK(rho == Catch::Approx(1.0).margin(1e-12));
        else
            CHECK(rho == Catch::Approx(0.5).margin(1e-12));
        CHECK(row.mean_abs_rho == Catch::Approx(std::abs(rho)).margin(1e-12));
    }
}

TEST_CASE("a clean-sweep tie falls back to the first enumerated distance") {
    // Mass moves monotonically from class 0 to class 1, so every distance is
    // strictly increasing and all six tie at rho = 1.
    auto manifest = single_kind_manifest(DistortionKind::contrast, {2.0, 2.5, 3.0});
    RecordStore store;
    store.insert(make_record("src__none", "clf", {0.7, 0.1, 0.1, 0.1}));
    store.insert(make_record("src__d0", "clf", {0.6, 0.2, 0.1, 0.1}));
    store.insert(make_record("src__d1", "clf", {0.5, 0.3, 0.1, 0.1}));
    store.insert(make_record("src__d2", "clf", {0.4, 0.4, 0.1, 0.1}));
    auto sel = select_distance(manifest, store);
    CHECK(sel.selected == DistanceKind::MAD);
    for (const auto& row : sel.rows)
        CHECK(row.mean_abs_rho == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("select_distance matches an independent reimplementation on surrogate data") {
    auto manifest = build_dataset(fake_corpus(4), DatasetOptions{}, 61);
    SurrogateClassifier proto;
    proto.decay = default_decay_map();
    auto bank = make_surrogate_bank(proto, 3, 62);
    RecordStore store;
    for (auto& rec : surrogate_records(bank, manifest)) store.insert(std::move(rec));

    auto sel = select_distance(manifest, store);

    const auto names = store.classifier_names();
    DistanceKind best_kind = DistanceKind::MAD;
    double best = -1.0;
    std::vector<double> means;
    for (DistanceKind dk : kDistanceKinds) {
        std::map<DistortionKind, std::pair<std::vector<double>, std::vector<double>>> groups;
        for (const auto& entry : manifest.entries) {
            if (entry.is_clean()) continue;
            const std::string clean_id = manifest.clean_id_of(entry);
            double score = 0.0;
            for (const auto& clf : names)
                score += naive_distance(store.get(clean_id, clf).probs,
                                        store.get(entry.id, clf).probs, dk);
            score /= static_cast<double>(names.size());
            groups[entry.distortion.kind].first.push_back(entry.distortion.degree);
            groups[entry.distortion.kind].second.push_back(score);
        }
        double sum_abs = 0.0;
        for (const auto& [kind, series] : groups)
            sum_abs += std::abs(spearman(series.first, series.second).rho);
        const double mean_abs = sum_abs / static_cast<double>(groups.size());
        means.push_back(mean_abs);
        if (mean_abs > best) {
            best = mean_abs;
            best_kind = dk;
        }
    }
    CHECK(sel.selected == best_kind);
    REQUIRE(sel.rows.size() == means.size());
    for (std::size_t i = 0; i < means.size(); ++i)
        CHECK(sel.rows[i].mean_abs_rho == means[i]);
}

TEST_CASE("select_distance validates its preconditions") {
    DatasetManifest clean_only = single_kind_manifest(DistortionKind::brightness, {});
    RecordStore store;
    store.insert(make_record("src__none", "clf", {0.5, 0.5}));
    CHECK_THROWS_AS(select_distance(clean_only, store), Error);

    auto one_degree = single_kind_manifest(DistortionKind::brightness, {2.0});
    store.insert(make_record("src__d0", "clf", {0.4, 0.6}));
    CHECK_THROWS_AS(select_distance(one_degree, store), Error);
}
