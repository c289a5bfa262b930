#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/features.hpp"
#include "aqua/image_io.hpp"
#include "aqua/jsonl.hpp"
#include "aqua/mlp.hpp"
#include "aqua/rng.hpp"

namespace aqua {

struct FilterConfig {
    double threshold = 0.0;
    int stride = 1;
    // Cost model, milliseconds. The scorer default mirrors a GPU assessor
    // latency; downstream models a detector plus per-detection recognition.
    double scorer_cost_ms = 14.2;
    double per_frame_cost_ms = 50.0;
    double per_detection_cost_ms = 200.0;
    double detections_per_frame = 1.0;
};

inline void validate(const FilterConfig& cfg) {
    require(cfg.stride >= 1, ErrorCategory::validation, "filter stride must be at least 1");
    require(cfg.scorer_cost_ms >= 0.0 && cfg.per_frame_cost_ms >= 0.0 &&
                cfg.per_detection_cost_ms >= 0.0 && cfg.detections_per_frame >= 0.0,
            ErrorCategory::validation, "filter costs must be non-negative");
    require(!std::isnan(cfg.threshold), ErrorCategory::validation, "filter threshold is NaN");
}

struct FrameEntry {
    std::string frame_id;
    std::uint64_t byte_size = 0;
    std::string path;               // image to score, when no replay quality given
    std::optional<double> quality;  // precomputed quality for replay streams
};

struct FrameStream {
    std::vector<FrameEntry> frames;
};

inline void validate(const FrameStream& stream) {
    require(!stream.frames.empty(), ErrorCategory::validation, "empty frame stream");
    std::set<std::string> ids;
    std::uint64_t total = 0;
    for (const auto& f : stream.frames) {
        require(!f.frame_id.empty(), ErrorCategory::validation, "frame with empty id");
        require(ids.insert(f.frame_id).second, ErrorCategory::validation,
                "duplicate frame id '" + f.frame_id + "'");
        total += f.byte_size;
    }
    require(total > 0, ErrorCategory::validation, "frame stream has zero total bytes");
}

struct FrameOutcome {
    std::string frame_id;
    bool scored = false;
    std::optional<double> score;  // absent on inherited frames and scorer failures
    bool passed = false;
};

struct FilterReport {
    std::vector<FrameOutcome> frames;
    std::vector<std::string> diagnostics;  // failed-closed frames, with reasons
    double pass_rate = 0.0;
    double bandwidth_fraction = 0.0;
    double downstream_compute_fraction = 0.0;
    double scorer_overhead_ms = 0.0;
    std::size_t frames_scored = 0;
};

using FrameScorer = std::function<double(const FrameEntry&)>;

// Quality for one stream entry: replay value when present, otherwise NSS
// features of the referenced image through the model.
inline FrameScorer model_scorer(const MlpModel& model) {
    return [&model](const FrameEntry& f) {
        if (f.quality) return *f.quality;
        require(!f.path.empty(), ErrorCategory::validation,
                "frame '" + f.frame_id + "' has neither quality nor image path");
        return quality_score(model, nss_features(read_image(f.path), f.frame_id));
    };
}

// Gate the stream: frames at indices 0, x, 2x, ... are scored, pass means
// score >= threshold, and every other frame inherits the latest decision. A
// frame the scorer cannot handle fails closed (dropped) and is logged.
inline FilterReport run_filter(const FrameStream& stream, const FrameScorer& scorer,
                               const FilterConfig& cfg) {
    validate(stream);
    validate(cfg);
    FilterReport report;
    report.frames.reserve(stream.frames.size());
    bool current_decision = false;
    std::uint64_t total_bytes = 0, passed_bytes = 0;
    std::size_t passed = 0;
    for (std::size_t i = 0; i < stream.frames.size(); ++i) {
        const FrameEntry& f = stream.frames[i];
        FrameOutcome outcome;
        outcome.frame_id = f.frame_id;
        if (i % static_cast<std::size_t>(cfg.stride) == 0) {
            outcome.scored = true;
            ++report.frames_scored;
            try {
                const double s = scorer(f);
                require(!std::isnan(s), ErrorCategory::numeric, "scorer returned NaN");
                outcome.score = s;
                current_decision = s >= cfg.threshold;
            } catch (const std::exception& e) {
                current_decision = false;
                report.diagnostics.push_back(f.frame_id + ": " + e.what());
            }
        }
        outcome.passed = current_decision;
        total_bytes += f.byte_size;
        if (outcome.passed) {
            passed_bytes += f.byte_size;
            ++passed;
        }
        report.frames.push_back(std::move(outcome));
    }
    const double n = static_cast<double>(stream.frames.size());
    report.pass_rate = static_cast<double>(passed) / n;
    report.bandwidth_fraction =
        static_cast<double>(passed_bytes) / static_cast<double>(total_bytes);
    report.scorer_overhead_ms = static_cast<double>(report.frames_scored) * cfg.scorer_cost_ms;
    report.downstream_compute_fraction = report.pass_rate;
    return report;
}

inline FilterReport run_filter(const FrameStream& stream, const MlpModel& model,
                               const FilterConfig& cfg) {
    return run_filter(stream, model_scorer(model), cfg);
}

struct CostSummary {
    double scorer_overhead_ms = 0.0;
    double downstream_ms = 0.0;
    double baseline_ms = 0.0;  // downstream cost had every frame passed
    double net_compute_fraction = 0.0;
};

inline CostSummary accounting(const FilterReport& report, const FilterConfig& cfg) {
    validate(cfg);
    const double per_frame =
        cfg.per_frame_cost_ms + cfg.per_detection_cost_ms * cfg.detections_per_frame;
    const double n = static_cast<double>(report.frames.size());
    std::size_t passed = 0;
    for (const auto& f : report.frames) passed += f.passed ? 1 : 0;
    CostSummary cost;
    cost.scorer_overhead_ms = report.scorer_overhead_ms;
    cost.downstream_ms = static_cast<double>(passed) * per_frame;
    cost.baseline_ms = n * per_frame;
    require(cost.baseline_ms > 0.0, ErrorCategory::validation,
            "accounting: zero baseline cost; set a positive downstream cost");
    cost.net_compute_fraction = (cost.scorer_overhead_ms + cost.downstream_ms) / cost.baseline_ms;
    return cost;
}

struct SweepCell {
    double threshold = 0.0;
    int stride = 1;
    FilterReport report;
    CostSummary cost;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // threshold-major, stride-minor order
    std::vector<std::string> warnings;
};

// Cartesian product of thresholds and strides. Scores are computed once per
// frame and shared across cells, so the monotonicity identities hold exactly.
inline SweepResult sweep(const FrameStream& stream, const FrameScorer& scorer,
                         std::vector<double> thresholds, std::vector<int> strides,
                         const FilterConfig& base_cfg) {
    validate(stream);
    require(!thresholds.empty() && !strides.empty(), ErrorCategory::validation,
            "sweep needs at least one threshold and one stride");
    SweepResult result;
    auto dedupe = [&result](auto& values, const char* what) {
        auto it = values.begin();
        std::set<typename std::decay_t<decltype(values)>::value_type> seen;
        while (it != values.end()) {
            if (!seen.insert(*it).second) {
                std::ostringstream os;
                os << "duplicate " << what << " " << *it << " dropped from sweep";
                result.warnings.push_back(os.str());
                it = values.erase(it);
            } else {
                ++it;
            }
        }
    };
    dedupe(thresholds, "threshold");
    dedupe(strides, "stride");

    std::map<std::size_t, std::optional<double>> cache;  // frame index -> score, nullopt = failed
    std::map<std::size_t, std::string> failures;
    auto score_at = [&](std::size_t i) -> std::optional<double> {
        auto it = cache.find(i);
        if (it != cache.end()) return it->second;
        std::optional<double> s;
        try {
            const double v = scorer(stream.frames[i]);
            require(!std::isnan(v), ErrorCategory::numeric, "scorer returned NaN");
            s = v;
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
        cache[i] = s;
        return s;
    };

    for (double threshold : thresholds) {
        for (int stride : strides) {
            FilterConfig cfg = base_cfg;
            cfg.threshold = threshold;
            cfg.stride = stride;
            FrameScorer replay = [&](const FrameEntry& f) -> double {
                // Entries are visited in order; find the index by pointer.
                const std::size_t i = static_cast<std::size_t>(&f - stream.frames.data());
                auto s = score_at(i);
                if (!s) raise(ErrorCategory::numeric, failures[i]);
                return *s;
            };
            SweepCell cell;
            cell.threshold = threshold;
            cell.stride = stride;
            cell.report = run_filter(stream, replay, cfg);
            cell.cost = accounting(cell.report, cfg);
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

inline SweepResult sweep(const FrameStream& stream, const MlpModel& model,
                         const std::vector<double>& thresholds, const std::vector<int>& strides,
                         const FilterConfig& base_cfg) {
    return sweep(stream, model_scorer(model), thresholds, strides, base_cfg);
}

// Piecewise-constant synthetic stream: quality is redrawn once per block and
// held for block_len frames; byte sizes vary per frame.
inline FrameStream make_blocky_stream(std::size_t n_frames, std::size_t block_len,
                                      std::uint64_t seed, double quality_lo = -1.0,
                                      double quality_hi = 1.0, std::uint64_t bytes_lo = 800,
                                      std::uint64_t bytes_hi = 1600) {
    require(n_frames >= 1 && block_len >= 1, ErrorCategory::validation,
            "synthetic stream needs positive frame and block counts");
    require(quality_hi >= quality_lo && bytes_hi >= bytes_lo, ErrorCategory::validation,
            "synthetic stream ranges reversed");
    FrameStream stream;
    stream.frames.reserve(n_frames);
    double block_quality = 0.0;
    for (std::size_t i = 0; i < n_frames; ++i) {
        if (i % block_len == 0) {
            rng::Stream s(rng::derive(seed, rng::hash_str("block"), i / block_len));
            block_quality = s.next_in(quality_lo, quality_hi);
        }
        rng::Stream s(rng::derive(seed, rng::hash_str("bytes"), i));
        FrameEntry f;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "f%06zu", i);
        f.frame_id = buf;
        f.byte_size = bytes_lo + s.next_u64() % (bytes_hi - bytes_lo + 1);
        f.quality = block_quality;
        stream.frames.push_back(std::move(f));
    }
    return stream;
}

inline void save_stream(const FrameStream& stream, const std::string& path,
                        jsonl::json extra_header = jsonl::json::object()) {
    validate(stream);
    jsonl::Writer w(path);
    jsonl::json header{{"format", "aqua-stream"}, {"version", 1}};
    for (auto& [k, v] : extra_header.items()) header[k] = v;
    w.write(header);
    for (const auto& f : stream.frames) {
        jsonl::json j{{"frame_id", f.frame_id}, {"byte_size", f.byte_size}};
        if (!f.path.empty()) j["path"] = f.path;
        if (f.quality) j["quality"] = *f.quality;
        w.write(j);
    }
}

inline FrameStream load_stream(const std::string& path) {
    auto doc = jsonl::read_file(path, "aqua-stream", 1);
    FrameStream stream = jsonl::decode(path, [&] {
        FrameStream s;
        for (const auto& j : doc.records) {
            FrameEntry f;
            f.frame_id = j.at("frame_id").get<std::string>();
            f.byte_size = j.at("byte_size").get<std::uint64_t>();
            if (j.contains("path")) f.path = j.at("path").get<std::string>();
            if (j.contains("quality")) f.quality = j.at("quality").get<double>();
            s.frames.push_back(std::move(f));
        }
        return s;
    });
    validate(stream);
    return stream;
}

inline void save_filter_report(const FilterReport& report, const std::string& path,
                               jsonl::json extra_header = jsonl::json::object()) {
    jsonl::Writer w(path);
    jsonl::json header{{"format", "aqua-filter"}, {"version", 1}};
    for (auto& [k, v] : extra_header.items()) header[k] = v;
    w.write(header);
    for (const auto& f : report.frames) {
        jsonl::json j{{"frame_id", f.frame_id}, {"scored", f.scored}};
        if (f.score) j["score"] = *f.score;
        j["passed"] = f.passed;
        w.write(j);
    }
    w.write({{"aggregate", true},
             {"pass_rate", report.pass_rate},
             {"bandwidth_fraction", report.bandwidth_fraction},
             {"downstream_compute_fraction", report.downstream_compute_fraction},
             {"scorer_overhead_ms", report.scorer_overhead_ms},
             {"frames_scored", report.frames_scored},
             {"diagnostics", report.diagnostics}});
}

namespace detail {

inline std::string csv_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return jsonl::json(v).dump();
}

}  // namespace detail

inline std::string sweep_csv(const SweepResult& result) {
    std::ostringstream os;
    os << "threshold,stride,pass_rate,bandwidth_fraction,net_compute_fraction\n";
    for (const auto& cell : result.cells)
        os << detail::csv_double(cell.threshold) << "," << cell.stride << ","
           << detail::csv_double(cell.report.pass_rate) << ","
           << detail::csv_double(cell.report.bandwidth_fraction) << ","
           << detail::csv_double(cell.cost.net_compute_fraction) << "\n";
    return os.str();
}

}  // namespace aqua
