#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/jsonl.hpp"

namespace aqua {

// One classifier's softmax output for one image.
struct ClassifierRecord {
    std::string image_id;
    std::string classifier_name;
    std::vector<double> probs;
    std::optional<int> true_class;

    int n() const { return static_cast<int>(probs.size()); }
};

inline void validate(const ClassifierRecord& rec) {
    require(rec.probs.size() >= 2, ErrorCategory::validation, "softmax needs at least 2 classes");
    double sum = 0.0;
    for (double p : rec.probs) {
        require(p >= 0.0 && std::isfinite(p), ErrorCategory::validation,
                "softmax probabilities must be finite and non-negative");
        sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-5, ErrorCategory::validation,
            "softmax probabilities must sum to 1 within 1e-5");
    if (rec.true_class)
        require(*rec.true_class >= 0 && *rec.true_class < rec.n(), ErrorCategory::validation,
                "true_class out of range");
}

// Read-only store of softmax records keyed by (image_id, classifier).
class RecordStore {
public:
    void insert(ClassifierRecord rec) {
        validate(rec);
        classifiers_.insert(rec.classifier_name);
        records_[key(rec.image_id, rec.classifier_name)] = std::move(rec);
    }

    const ClassifierRecord* find(const std::string& image_id, const std::string& classifier) const {
        auto it = records_.find(key(image_id, classifier));
        return it == records_.end() ? nullptr : &it->second;
    }

    const ClassifierRecord& get(const std::string& image_id, const std::string& classifier) const {
        const ClassifierRecord* rec = find(image_id, classifier);
        require(rec != nullptr, ErrorCategory::state,
                "missing softmax record for image '" + image_id + "', classifier '" + classifier + "'");
        return *rec;
    }

    std::vector<std::string> classifier_names() const {
        return {classifiers_.begin(), classifiers_.end()};
    }

    std::size_t size() const { return records_.size(); }

private:
    static std::string key(const std::string& image_id, const std::string& classifier) {
        return image_id + "\x1f" + classifier;
    }

    std::map<std::string, ClassifierRecord> records_;
    std::set<std::string> classifiers_;
};

inline void save_records(const std::vector<ClassifierRecord>& records, const std::string& path) {
    jsonl::Writer w(path);
    w.write({{"format", "aqua-softmax"}, {"version", 1}});
    for (const auto& rec : records) {
        jsonl::json j{{"image_id", rec.image_id},
                      {"classifier", rec.classifier_name},
                      {"n", rec.n()},
                      {"probs", rec.probs}};
        if (rec.true_class) j["true_class"] = *rec.true_class;
        w.write(j);
    }
}

// Loader re-normalizes sums within 1e-5 of 1 (records may carry quantized
// decimals) and rejects anything further off.
inline RecordStore load_records(const std::string& path) {
    auto doc = jsonl::read_file(path, "aqua-softmax", 1);
    return jsonl::decode(path, [&] {
        RecordStore store;
        for (const auto& j : doc.records) {
            ClassifierRecord rec;
            rec.image_id = j.at("image_id").get<std::string>();
            rec.classifier_name = j.at("classifier").get<std::string>();
            rec.probs = j.at("probs").get<std::vector<double>>();
            if (j.contains("true_class")) rec.true_class = j.at("true_class").get<int>();
            require(j.at("n").get<int>() == rec.n(), ErrorCategory::parse,
                    path + ": record length disagrees with its n field");
            double sum = 0.0;
            for (double p : rec.probs) {
                require(std::isfinite(p) && p >= 0.0, ErrorCategory::parse,
                        path + ": bad probability value");
                sum += p;
            }
            require(std::abs(sum - 1.0) <= 1e-5, ErrorCategory::parse,
                    path + ": probabilities for '" + rec.image_id + "' sum to " +
                        std::to_string(sum));
            if (sum != 1.0)
                for (double& p : rec.probs) p /= sum;
            store.insert(std::move(rec));
        }
        return store;
    });
}

}  // namespace aqua
