#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aqua/distortions.hpp"
#include "aqua/error.hpp"
#include "aqua/jsonl.hpp"
#include "aqua/rng.hpp"

namespace aqua {

enum class Split { train, test };

inline const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

inline Split split_from_name(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "test") return Split::test;
    raise(ErrorCategory::parse, "unknown split: " + std::string(name));
}

struct ManifestEntry {
    std::string id;
    std::string source;  // clean image id
    DistortionSpec distortion;
    Split split = Split::train;

    bool is_clean() const { return distortion.kind == DistortionKind::none; }
};

struct CleanImage {
    std::string image_id;
    std::string path;
};

struct DatasetManifest {
    std::uint64_t corpus_seed = 0;
    std::vector<ManifestEntry> entries;

    // id of the clean (`none`) entry for a given source image id.
    std::map<std::string, std::string> clean_id_by_source;

    const ManifestEntry* find(const std::string& id) const {
        for (const auto& e : entries)
            if (e.id == id) return &e;
        return nullptr;
    }

    void rebuild_clean_index() {
        clean_id_by_source.clear();
        for (const auto& e : entries)
            if (e.is_clean()) clean_id_by_source[e.source] = e.id;
    }

    // The clean counterpart of an entry, used to pair original/distorted records.
    const std::string& clean_id_of(const ManifestEntry& e) const {
        auto it = clean_id_by_source.find(e.source);
        require(it != clean_id_by_source.end(), ErrorCategory::state,
                "no clean entry for source " + e.source);
        return it->second;
    }
};

struct DatasetOptions {
    std::vector<DistortionKind> kinds{kDistortionKinds.begin(), kDistortionKinds.end()};
    int degrees_per_kind = 6;
    double train_fraction = 0.8;
};

// Replicates the training-corpus construction: per clean image one `none`
// entry plus kinds x degrees distorted entries. Degrees are sampled once per
// corpus so every image shares the same severity ladder; the split is assigned
// per source image so all variants of one image land on the same side.
inline DatasetManifest build_dataset(const std::vector<CleanImage>& clean_images,
                                     const DatasetOptions& opts, std::uint64_t corpus_seed) {
    require(!clean_images.empty(), ErrorCategory::validation, "empty clean-image manifest");
    require(opts.train_fraction >= 0.0 && opts.train_fraction <= 1.0, ErrorCategory::validation,
            "train fraction must be in [0,1]");
    {
        std::set<std::string> ids;
        for (const auto& ci : clean_images)
            require(ids.insert(ci.image_id).second, ErrorCategory::validation,
                    "duplicate clean image id: " + ci.image_id);
    }

    std::map<DistortionKind, std::vector<double>> degrees;
    for (DistortionKind kind : opts.kinds)
        degrees[kind] = sample_degrees(kind, opts.degrees_per_kind, corpus_seed);

    // Exact split by seeded shuffle of source images.
    std::vector<std::size_t> order(clean_images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng::Stream shuffle(rng::derive(corpus_seed, rng::hash_str("split")));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle.next_below(i)]);
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(opts.train_fraction * static_cast<double>(order.size())));
    std::vector<Split> splits(clean_images.size(), Split::test);
    for (std::size_t i = 0; i < n_train && i < order.size(); ++i) splits[order[i]] = Split::train;

    DatasetManifest manifest;
    manifest.corpus_seed = corpus_seed;
    for (std::size_t i = 0; i < clean_images.size(); ++i) {
        const auto& ci = clean_images[i];
        ManifestEntry clean;
        clean.id = ci.image_id + "__none";
        clean.source = ci.image_id;
        clean.distortion = DistortionSpec::none();
        clean.split = splits[i];
        manifest.entries.push_back(clean);

        for (DistortionKind kind : opts.kinds) {
            const auto& ladder = degrees[kind];
            for (std::size_t d = 0; d < ladder.size(); ++d) {
                ManifestEntry e;
                e.id = ci.image_id + "__" + kind_name(kind) + "-d" + std::to_string(d);
                e.source = ci.image_id;
                e.distortion.kind = kind;
                e.distortion.degree = ladder[d];
                e.distortion.seed = rng::derive(corpus_seed, rng::hash_str(ci.image_id),
                                                rng::hash_str(kind_name(kind)), d);
                e.split = splits[i];
                manifest.entries.push_back(e);
            }
        }
    }
    manifest.rebuild_clean_index();
    return manifest;
}

inline void save_manifest(const DatasetManifest& manifest, const std::string& path,
                          jsonl::json extra_header = jsonl::json::object()) {
    jsonl::Writer w(path);
    jsonl::json header{{"format", "aqua-manifest"}, {"version", 1},
                       {"corpus_seed", manifest.corpus_seed}};
    for (auto& [k, v] : extra_header.items()) header[k] = v;
    w.write(header);
    for (const auto& e : manifest.entries) {
        jsonl::json j{{"id", e.id},
                      {"source", e.source},
                      {"kind", kind_name(e.distortion.kind)},
                      {"degree", e.distortion.degree},
                      {"seed", e.distortion.seed},
                      {"split", split_name(e.split)}};
        w.write(j);
    }
}

inline DatasetManifest load_manifest(const std::string& path) {
    auto doc = jsonl::read_file(path, "aqua-manifest", 1);
    DatasetManifest manifest = jsonl::decode(path, [&] {
        DatasetManifest m;
        m.corpus_seed = doc.header.value("corpus_seed", std::uint64_t{0});
        std::set<std::string> seen;
        for (const auto& j : doc.records) {
            ManifestEntry e;
            e.id = j.at("id").get<std::string>();
            e.source = j.at("source").get<std::string>();
            e.distortion.kind = kind_from_name(j.at("kind").get<std::string>());
            e.distortion.degree = j.at("degree").get<double>();
            e.distortion.seed = j.at("seed").get<std::uint64_t>();
            e.split = split_from_name(j.at("split").get<std::string>());
            require(seen.insert(e.id).second, ErrorCategory::parse,
                    path + ": duplicate entry id " + e.id);
            if (!e.is_clean()) validate(e.distortion);
            m.entries.push_back(std::move(e));
        }
        return m;
    });
    manifest.rebuild_clean_index();
    return manifest;
}

}  // namespace aqua
