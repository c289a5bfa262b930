#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <aqua/error.hpp>
#include <aqua/manifest.hpp>
#include <aqua/records.hpp>
#include <aqua/reports.hpp>
#include <aqua/rng.hpp>
#include <aqua/surrogate.hpp>

using namespace aqua;

namespace {

std::vector<CleanImage> fake_corpus(int n) {
    std::vector<CleanImage> out;
    for (int i = 0; i < n; ++i)
        out.push_back({"src" + std::to_string(i), "src" + std::to_string(i) + ".png"});
    return out;
}

SurrogateClassifier default_surrogate(std::uint64_t seed, double noise) {
    SurrogateClassifier s;
    s.decay = default_decay_map();
    s.noise_scale = noise;
    s.seed = seed;
    return s;
}

RecordStore store_from(const std::vector<ClassifierRecord>& records) {
    RecordStore store;
    for (const auto& r : records) store.insert(r);
    return store;
}

}  // namespace

TEST_CASE("severity anchors at the identity point of each kind") {
    const auto mode = SeverityMode::identity_anchored;
    for (DistortionKind kind : {DistortionKind::brightness, DistortionKind::contrast}) {
        const auto r = degree_range(kind);
        CHECK(severity(kind, 1.0, mode) == 0.0);
        CHECK(severity(kind, r.lo, mode) == Catch::Approx(1.0).margin(1e-12));
        CHECK(severity(kind, r.hi, mode) == Catch::Approx(1.0).margin(1e-12));
        CHECK(severity(kind, (1.0 + r.hi) / 2.0, mode) == Catch::Approx(0.5).margin(1e-12));
    }
    CHECK(severity(DistortionKind::motion_blur, 1.0, mode) == 0.0);
    CHECK(severity(DistortionKind::motion_blur, degree_range(DistortionKind::motion_blur).hi, mode) == 1.0);
    CHECK(severity(DistortionKind::defocus_blur, 0.0, mode) == 0.0);
    CHECK(severity(DistortionKind::defocus_blur, degree_range(DistortionKind::defocus_blur).hi, mode) == 1.0);
    // Compression quality runs opposite to severity.
    const auto cr = degree_range(DistortionKind::compression);
    CHECK(severity(DistortionKind::compression, cr.hi, mode) == 0.0);
    CHECK(severity(DistortionKind::compression, cr.lo, mode) == 1.0);
    const auto gr = degree_range(DistortionKind::gaussian_noise);
    CHECK(severity(DistortionKind::gaussian_noise, gr.lo, mode) == 0.0);
    CHECK(severity(DistortionKind::gaussian_noise, gr.hi, mode) == 1.0);
    CHECK(severity(DistortionKind::none, 123.0, mode) == 0.0);
}

TEST_CASE("linear severity is affine over each degree range") {
    const auto mode = SeverityMode::linear_in_degree;
    for (DistortionKind kind : kDistortionKinds) {
        const auto r = degree_range(kind);
        CHECK(severity(kind, r.lo, mode) == 0.0);
        CHECK(severity(kind, r.hi, mode) == Catch::Approx(1.0).margin(1e-12));
        CHECK(severity(kind, 0.5 * (r.lo + r.hi), mode) == Catch::Approx(0.5).margin(1e-12));
    }
    CHECK(severity(DistortionKind::none, 1.0, mode) == 0.0);
}

TEST_CASE("a clean entry with zero noise scores the base confidence exactly") {
    auto s = default_surrogate(7, 0.0);
    ManifestEntry entry;
    entry.id = "src0__none";
    entry.source = "src0";
    entry.distortion = DistortionSpec::none();
    auto rec = surrogate_predict(s, entry);
    CHECK(rec.probs[static_cast<std::size_t>(*rec.true_class)] == 0.92);
    CHECK(rec.true_class == surrogate_true_class("src0", 16));
    double sum = 0.0;
    for (double p : rec.probs) sum += p;
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("confidence decays exponentially in severity") {
    auto s = default_surrogate(7, 0.0);
    s.severity_mode = SeverityMode::linear_in_degree;
    const auto r = degree_range(DistortionKind::gaussian_noise);
    ManifestEntry entry;
    entry.id = "e";
    entry.source = "src1";
    entry.distortion = {DistortionKind::gaussian_noise, 0.5 * (r.lo + r.hi), 0};
    auto rec = surrogate_predict(s, entry);
    const double expected = std::clamp(0.92 * std::exp(-2.5 * 0.5), 1.0 / 16.0, 1.0);
    CHECK(ccc(rec.probs, *rec.true_class) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("surrogate records are valid softmaxes and deterministic") {
    auto manifest = build_dataset(fake_corpus(4), DatasetOptions{}, 3);
    auto bank = make_surrogate_bank(default_surrogate(0, 0.02), 3, 11);
    auto a = surrogate_records(bank, manifest);
    auto b = surrogate_records(bank, manifest);
    REQUIRE(a.size() == manifest.entries.size() * 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK_NOTHROW(validate(a[i]));
        CHECK(a[i].probs == b[i].probs);
    }
    auto other_bank = make_surrogate_bank(default_surrogate(0, 0.02), 3, 12);
    auto c = surrogate_records(other_bank, manifest);
    int different = 0;
    for (std::size_t i = 0; i < a.size(); ++i) different += a[i].probs != c[i].probs;
    CHECK(different > 0);
}

TEST_CASE("bank members share the label but not the noise") {
    auto manifest = build_dataset(fake_corpus(2), DatasetOptions{}, 5);
    auto bank = make_surrogate_bank(default_surrogate(0, 0.02), 4, 21);
    CHECK(bank[0].name == "surrogate-0");
    CHECK(bank[3].name == "surrogate-3");
    CHECK(bank[0].seed != bank[1].seed);
    const auto& entry = manifest.entries[1];
    auto r0 = surrogate_predict(bank[0], entry);
    auto r1 = surrogate_predict(bank[1], entry);
    CHECK(r0.true_class == r1.true_class);
    CHECK(r0.probs != r1.probs);
    CHECK_THROWS_AS(make_surrogate_bank(default_surrogate(0, 0.0), 0, 1), Error);
}

TEST_CASE("heavy distortion flips the prediction to the confusion class") {
    auto s = default_surrogate(3, 0.0);
    ManifestEntry clean;
    clean.id = "c";
    clean.source = "src2";
    clean.distortion = DistortionSpec::none();
    CHECK(classifier_correct(surrogate_predict(s, clean)));

    ManifestEntry severe;
    severe.id = "d";
    severe.source = "src2";
    severe.distortion = {DistortionKind::gaussian_noise,
                         degree_range(DistortionKind::gaussian_noise).hi, 0};
    auto rec = surrogate_predict(s, severe);
    CHECK_FALSE(classifier_correct(rec));
    // The wrong mass concentrates on a single confusion class.
    double top = 0.0;
    for (double p : rec.probs) top = std::max(top, p);
    CHECK(top > 0.5);
}

TEST_CASE("surrogate validation rejects broken configs") {
    auto s = default_surrogate(0, 0.0);
    s.n_classes = 1;
    CHECK_THROWS_AS(validate(s), Error);
    s = default_surrogate(0, 0.0);
    s.base_confidence = 0.01;  // below 1/n
    CHECK_THROWS_AS(validate(s), Error);
    s = default_surrogate(0, -0.1);
    CHECK_THROWS_AS(validate(s), Error);
    s = default_surrogate(0, 0.0);
    s.bump_max = 1.2;
    CHECK_THROWS_AS(validate(s), Error);
    s = default_surrogate(0, 0.0);
    s.decay.erase(DistortionKind::gaussian_noise);
    ManifestEntry entry;
    entry.id = "e";
    entry.source = "s";
    entry.distortion = {DistortionKind::gaussian_noise, 0.1, 0};
    CHECK_THROWS_AS(surrogate_predict(s, entry), Error);
}

TEST_CASE("accuracy_vs_degree is non-increasing when confidence decays cleanly") {
    auto manifest = build_dataset(fake_corpus(6), DatasetOptions{}, 13);
    auto proto = default_surrogate(0, 0.0);
    proto.severity_mode = SeverityMode::linear_in_degree;
    auto bank = make_surrogate_bank(proto, 2, 31);
    auto store = store_from(surrogate_records(bank, manifest));

    auto curves = accuracy_vs_degree(manifest, store, 1);
    for (const auto& [kind, curve] : curves) {
        if (kind == DistortionKind::none) {
            REQUIRE(curve.size() == 1);
            CHECK(curve[0].accuracy == 1.0);
            continue;
        }
        REQUIRE(curve.size() == 6);
        for (std::size_t i = 1; i < curve.size(); ++i) {
            INFO(kind_name(kind) << " degree " << curve[i].degree);
            CHECK(curve[i].accuracy <= curve[i - 1].accuracy + 1e-12);
        }
    }

    // Rank never exceeds the class count, so top-n accuracy is 1 everywhere.
    auto all = accuracy_vs_degree(manifest, store, proto.n_classes);
    for (const auto& [kind, curve] : all)
        for (const auto& p : curve) CHECK(p.accuracy == 1.0);
}

TEST_CASE("correlation_report is exact when quality equals the anchor confidence") {
    auto manifest = build_dataset(fake_corpus(8), DatasetOptions{}, 17);
    auto bank = make_surrogate_bank(default_surrogate(0, 0.02), 2, 41);
    auto store = store_from(surrogate_records(bank, manifest));

    std::map<std::string, double> quality;
    for (const auto& entry : manifest.entries) {
        const auto& rec = store.get(entry.id, "surrogate-0");
        quality[entry.id] = ccc(rec.probs, *rec.true_class);
    }
    auto rows = correlation_report(manifest, quality, store, "surrogate-0");
    REQUIRE(rows.size() == kDistortionKinds.size() + 2);  // kinds + none + all
    CHECK(rows.back().label == "all");
    CHECK(rows.back().n == manifest.entries.size());
    for (const auto& r : rows) {
        INFO(r.label);
        CHECK_FALSE(r.degenerate);
        CHECK(r.rho == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("correlation_report marks rows too small to rank as degenerate") {
    // Two sources leave the clean row with only two points, below the
    // three-point Spearman minimum; the report must not abort.
    auto manifest = build_dataset(fake_corpus(2), DatasetOptions{}, 29);
    auto bank = make_surrogate_bank(default_surrogate(0, 0.02), 1, 53);
    auto store = store_from(surrogate_records(bank, manifest));
    std::map<std::string, double> quality;
    for (const auto& entry : manifest.entries) {
        const auto& rec = store.get(entry.id, "surrogate-0");
        quality[entry.id] = ccc(rec.probs, *rec.true_class);
    }
    auto rows = correlation_report(manifest, quality, store, "surrogate-0");
    bool saw_small = false;
    for (const auto& r : rows) {
        INFO(r.label);
        if (r.n < 3) {
            saw_small = true;
            CHECK(r.degenerate);
            CHECK(r.rho == 0.0);
        }
    }
    CHECK(saw_small);
}

TEST_CASE("correlation_report hovers near zero for unrelated quality") {
    auto manifest = build_dataset(fake_corpus(12), DatasetOptions{}, 19);
    auto bank = make_surrogate_bank(default_surrogate(0, 0.02), 1, 43);
    auto store = store_from(surrogate_records(bank, manifest));
    rng::Stream s(44);
    std::map<std::string, double> quality;
    for (const auto& entry : manifest.entries) quality[entry.id] = s.next_gaussian();
    auto rows = correlation_report(manifest, quality, store, "surrogate-0");
    CHECK(std::abs(rows.back().rho) < 0.1);  // pooled row, n = 516
}

TEST_CASE("labeled_scores carries quality and top-1 agreement") {
    auto manifest = build_dataset(fake_corpus(2), DatasetOptions{}, 23);
    auto bank = make_surrogate_bank(default_surrogate(0, 0.0), 1, 47);
    auto store = store_from(surrogate_records(bank, manifest));
    std::map<std::string, double> quality;
    for (const auto& entry : manifest.entries) quality[entry.id] = 1.0;
    auto items = labeled_scores(manifest, quality, store, "surrogate-0");
    REQUIRE(items.size() == manifest.entries.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        CHECK(items[i].image_id == manifest.entries[i].id);
        CHECK(items[i].quality_score == 1.0);
        CHECK(items[i].classifier_correct ==
              classifier_correct(store.get(manifest.entries[i].id, "surrogate-0")));
    }
    quality.erase(items.front().image_id);
    CHECK_THROWS_AS(labeled_scores(manifest, quality, store, "surrogate-0"), Error);
}
