#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aqua/distortions.hpp"
#include "aqua/error.hpp"
#include "aqua/manifest.hpp"
#include "aqua/records.hpp"
#include "aqua/rng.hpp"

namespace aqua {

// How a distortion degree maps to the [0,1] severity driving confidence
// decay. identity_anchored puts zero where the distortion is a no-op
// (brightness/contrast 1.0, motion length 1, defocus radius 0, compression
// quality at range top); linear_in_degree is affine over the Table-1 range,
// which makes confidence strictly monotone in the raw degree for every kind.
enum class SeverityMode { identity_anchored, linear_in_degree };

inline const char* severity_mode_name(SeverityMode m) {
    return m == SeverityMode::identity_anchored ? "identity_anchored" : "linear_in_degree";
}

inline SeverityMode severity_mode_from_name(const std::string& name) {
    if (name == "identity_anchored") return SeverityMode::identity_anchored;
    if (name == "linear_in_degree") return SeverityMode::linear_in_degree;
    raise(ErrorCategory::validation, "unknown severity mode '" + name + "'");
}

inline double severity(DistortionKind kind, double degree, SeverityMode mode) {
    if (kind == DistortionKind::none) return 0.0;
    const DegreeRange range = degree_range(kind);
    double s = 0.0;
    if (mode == SeverityMode::linear_in_degree) {
        s = (degree - range.lo) / (range.hi - range.lo);
    } else {
        switch (kind) {
            case DistortionKind::brightness:
            case DistortionKind::contrast:
                s = degree < 1.0 ? (1.0 - degree) / (1.0 - range.lo)
                                 : (degree - 1.0) / (range.hi - 1.0);
                break;
            case DistortionKind::motion_blur:
                s = (degree - 1.0) / (range.hi - 1.0);
                break;
            case DistortionKind::defocus_blur:
                s = degree / range.hi;
                break;
            case DistortionKind::compression:
                s = (range.hi - degree) / (range.hi - range.lo);
                break;
            case DistortionKind::gaussian_noise:
            case DistortionKind::lowlight_noise:
                s = (degree - range.lo) / (range.hi - range.lo);
                break;
            case DistortionKind::none:
                break;
        }
    }
    return std::clamp(s, 0.0, 1.0);
}

struct SurrogateClassifier {
    std::string name = "surrogate-0";
    int n_classes = 16;
    double base_confidence = 0.92;
    std::map<DistortionKind, double> decay;
    double noise_scale = 0.02;
    double bump_max = 0.85;  // share of the residual mass the confusion class can take
    SeverityMode severity_mode = SeverityMode::identity_anchored;
    std::uint64_t seed = 0;
};

inline std::map<DistortionKind, double> default_decay_map() {
    return {{DistortionKind::brightness, 2.2},   {DistortionKind::contrast, 1.8},
            {DistortionKind::motion_blur, 3.0},  {DistortionKind::compression, 2.0},
            {DistortionKind::defocus_blur, 3.0}, {DistortionKind::gaussian_noise, 2.5},
            {DistortionKind::lowlight_noise, 2.5}};
}

inline void validate(const SurrogateClassifier& s) {
    require(s.n_classes >= 2, ErrorCategory::validation, "surrogate needs at least 2 classes");
    require(s.base_confidence >= 1.0 / s.n_classes && s.base_confidence <= 1.0,
            ErrorCategory::validation, "surrogate base confidence outside [1/n, 1]");
    require(s.noise_scale >= 0.0, ErrorCategory::validation, "surrogate noise scale negative");
    require(s.bump_max >= 0.0 && s.bump_max <= 1.0, ErrorCategory::validation,
            "surrogate bump share outside [0, 1]");
    for (const auto& [kind, rate] : s.decay)
        require(rate >= 0.0, ErrorCategory::validation, "surrogate decay rate negative");
}

// True class is a property of the source image alone, shared by every
// classifier so bank members agree on the label.
inline int surrogate_true_class(const std::string& source, int n_classes) {
    return static_cast<int>(rng::derive(rng::hash_str("true-class"), rng::hash_str(source)) %
                            static_cast<std::uint64_t>(n_classes));
}

// Softmax for one manifest entry: confidence decays exponentially in
// severity, the leftover mass spreads uniformly except for a seeded bump on
// one stable confusion class that grows with severity, so heavy distortion
// produces confident-wrong records.
inline ClassifierRecord surrogate_predict(const SurrogateClassifier& s,
                                          const ManifestEntry& entry) {
    validate(s);
    const DistortionKind kind = entry.distortion.kind;
    double rate = 0.0;
    if (kind != DistortionKind::none) {
        auto it = s.decay.find(kind);
        require(it != s.decay.end(), ErrorCategory::validation,
                std::string("surrogate has no decay rate for ") + kind_name(kind));
        rate = it->second;
    }
    const double sev = severity(kind, entry.distortion.degree, s.severity_mode);
    const int n = s.n_classes;
    const int true_class = surrogate_true_class(entry.source, n);

    const std::uint64_t entry_key =
        rng::derive(rng::hash_str(entry.source), rng::hash_str(kind_name(kind)),
                    std::bit_cast<std::uint64_t>(entry.distortion.degree));
    rng::Stream stream(rng::derive(s.seed, entry_key));
    double c = s.base_confidence * std::exp(-rate * sev);
    if (s.noise_scale > 0.0) c += s.noise_scale * stream.next_gaussian();
    c = std::clamp(c, 1.0 / n, 1.0);

    const double w = std::clamp(s.bump_max * sev, 0.0, 1.0);
    const std::uint64_t conf_key =
        rng::derive(s.seed, rng::hash_str("confusion"),
                    rng::derive(rng::hash_str(entry.source), rng::hash_str(kind_name(kind))));
    int confusion = static_cast<int>(conf_key % static_cast<std::uint64_t>(n - 1));
    if (confusion >= true_class) ++confusion;

    ClassifierRecord rec;
    rec.image_id = entry.id;
    rec.classifier_name = s.name;
    rec.true_class = true_class;
    rec.probs.assign(static_cast<std::size_t>(n), (1.0 - c) * (1.0 - w) / (n - 1));
    rec.probs[static_cast<std::size_t>(true_class)] = c;
    rec.probs[static_cast<std::size_t>(confusion)] += (1.0 - c) * w;
    validate(rec);
    return rec;
}

// Bank members share configuration but draw independent noise and confusion
// classes through their derived seeds.
inline std::vector<SurrogateClassifier> make_surrogate_bank(const SurrogateClassifier& prototype,
                                                            int count, std::uint64_t bank_seed) {
    require(count >= 1, ErrorCategory::validation, "surrogate bank needs at least one member");
    std::vector<SurrogateClassifier> bank;
    bank.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        SurrogateClassifier s = prototype;
        s.name = "surrogate-" + std::to_string(i);
        s.seed = rng::derive(bank_seed, rng::hash_str(s.name));
        bank.push_back(std::move(s));
    }
    return bank;
}

// One record per (entry, classifier), in manifest-then-bank order.
inline std::vector<ClassifierRecord> surrogate_records(
    const std::vector<SurrogateClassifier>& bank, const DatasetManifest& manifest) {
    std::vector<ClassifierRecord> out;
    out.reserve(manifest.entries.size() * bank.size());
    for (const auto& entry : manifest.entries)
        for (const auto& s : bank) out.push_back(surrogate_predict(s, entry));
    return out;
}

// Top-1 agreement with the true class; probability ties resolve to the
// lowest index, matching the rank convention.
inline bool classifier_correct(const ClassifierRecord& rec) {
    require(rec.true_class.has_value(), ErrorCategory::validation,
            "classifier_correct needs true_class");
    std::size_t best = 0;
    for (std::size_t i = 1; i < rec.probs.size(); ++i)
        if (rec.probs[i] > rec.probs[best]) best = i;
    return static_cast<int>(best) == *rec.true_class;
}

}  // namespace aqua
