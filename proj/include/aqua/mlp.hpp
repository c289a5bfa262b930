#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "aqua/error.hpp"
#include "aqua/features.hpp"
#include "aqua/jsonl.hpp"
#include "aqua/rng.hpp"
#include "aqua/stats.hpp"

namespace aqua {

// Fully-connected regressor: rectified hidden layers, identity output,
// scalar prediction. weights[l] is layer_dims[l+1] x layer_dims[l] row-major.
struct MlpModel {
    std::vector<int> layer_dims;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::string extractor_id;

    int input_dim() const { return layer_dims.empty() ? 0 : layer_dims.front(); }
    std::size_t layer_count() const { return weights.size(); }
};

inline void validate(const MlpModel& m) {
    require(m.layer_dims.size() >= 2, ErrorCategory::validation, "model needs at least 2 layer dims");
    for (int d : m.layer_dims)
        require(d >= 1, ErrorCategory::validation, "model layer dims must be positive");
    require(m.layer_dims.back() == 1, ErrorCategory::validation, "model output dim must be 1");
    require(m.weights.size() == m.layer_dims.size() - 1 && m.biases.size() == m.weights.size(),
            ErrorCategory::dimension, "model layer count disagrees with dims");
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        const std::size_t rows = static_cast<std::size_t>(m.layer_dims[l + 1]);
        const std::size_t cols = static_cast<std::size_t>(m.layer_dims[l]);
        require(m.weights[l].size() == rows * cols, ErrorCategory::dimension,
                "model weight shape mismatch");
        require(m.biases[l].size() == rows, ErrorCategory::dimension, "model bias shape mismatch");
        for (double v : m.weights[l])
            require(std::isfinite(v), ErrorCategory::validation, "model has non-finite weight");
        for (double v : m.biases[l])
            require(std::isfinite(v), ErrorCategory::validation, "model has non-finite bias");
    }
}

// Seeded init: every parameter uniform in +-1/sqrt(fan_in) of its layer.
inline MlpModel init_model(std::vector<int> layer_dims, const std::string& extractor_id,
                           std::uint64_t seed) {
    MlpModel m;
    m.layer_dims = std::move(layer_dims);
    m.extractor_id = extractor_id;
    require(m.layer_dims.size() >= 2, ErrorCategory::validation, "model needs at least 2 layer dims");
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
        const std::size_t rows = static_cast<std::size_t>(m.layer_dims[l + 1]);
        const std::size_t cols = static_cast<std::size_t>(m.layer_dims[l]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        rng::Stream stream(rng::derive(seed, rng::hash_str("init"), l));
        std::vector<double> w(rows * cols), b(rows);
        for (double& v : w) v = stream.next_in(-bound, bound);
        for (double& v : b) v = stream.next_in(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    validate(m);
    return m;
}

namespace detail {

// Returns activations per layer; activations[0] is the input, the last entry
// the scalar output. Hidden layers rectified, output identity.
inline std::vector<std::vector<double>> mlp_activations(const MlpModel& m,
                                                        const std::vector<double>& x) {
    require(static_cast<int>(x.size()) == m.input_dim(), ErrorCategory::dimension,
            "forward: input length does not match model input dim");
    std::vector<std::vector<double>> acts;
    acts.reserve(m.layer_count() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const std::size_t rows = static_cast<std::size_t>(m.layer_dims[l + 1]);
        const std::size_t cols = static_cast<std::size_t>(m.layer_dims[l]);
        const bool hidden = l + 1 < m.layer_count();
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = m.biases[l][r];
            const double* wrow = m.weights[l].data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) acc += wrow[c] * acts.back()[c];
            out[r] = hidden ? std::max(acc, 0.0) : acc;
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const MlpModel& m) {
        Gradients g;
        for (std::size_t l = 0; l < m.layer_count(); ++l) {
            g.weights.emplace_back(m.weights[l].size(), 0.0);
            g.biases.emplace_back(m.biases[l].size(), 0.0);
        }
        return g;
    }
};

// Accumulates d(pred)/d(params) * upstream into g. Rectifier gradient is 0
// at exactly 0 (subgradient choice; matches the forward's max).
inline void accumulate_gradients(const MlpModel& m,
                                 const std::vector<std::vector<double>>& acts, double upstream,
                                 Gradients& g) {
    std::vector<double> delta{upstream};
    for (std::size_t l = m.layer_count(); l-- > 0;) {
        const std::size_t rows = static_cast<std::size_t>(m.layer_dims[l + 1]);
        const std::size_t cols = static_cast<std::size_t>(m.layer_dims[l]);
        const bool hidden = l + 1 < m.layer_count();
        if (hidden)
            for (std::size_t r = 0; r < rows; ++r)
                if (acts[l + 1][r] <= 0.0) delta[r] = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            g.biases[l][r] += delta[r];
            double* grow = g.weights[l].data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) grow[c] += delta[r] * acts[l][c];
        }
        if (l == 0) break;
        std::vector<double> prev(cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* wrow = m.weights[l].data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) prev[c] += wrow[c] * delta[r];
        }
        delta = std::move(prev);
    }
}

}  // namespace detail

inline double forward(const MlpModel& m, const std::vector<double>& x) {
    const auto acts = detail::mlp_activations(m, x);
    const double y = acts.back()[0];
    require(std::isfinite(y), ErrorCategory::numeric, "forward: non-finite output");
    return y;
}

// FeatureVector entry point: also checks the vector came from the extractor
// the model was trained on. An empty extractor_id on either side skips the
// check (toy models, hand-built vectors).
inline double forward(const MlpModel& m, const FeatureVector& x) {
    if (!m.extractor_id.empty() && !x.extractor_id.empty())
        require(m.extractor_id == x.extractor_id, ErrorCategory::validation,
                "forward: feature extractor '" + x.extractor_id + "' does not match model's '" +
                    m.extractor_id + "'");
    return forward(m, x.values);
}

// The regressor predicts an opinion score that rises with distortion;
// quality is its negation so that higher is better and the pass rule
// (score >= threshold) reads naturally. Every scoring path goes through
// this, keeping the sign convention in one place.
inline double quality_score(const MlpModel& m, const FeatureVector& fv) {
    return -forward(m, fv);
}

struct TrainSample {
    std::vector<double> x;
    double y = 0.0;
};

struct TrainConfig {
    double learning_rate = 1e-5;
    int epochs = 200;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 32;
    std::vector<int> hidden_dims{64};
    std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& cfg) {
    require(cfg.learning_rate > 0.0, ErrorCategory::validation, "learning_rate must be positive");
    require(cfg.epochs >= 0, ErrorCategory::validation, "epochs must be non-negative");
    require(cfg.batch_size >= 1, ErrorCategory::validation, "batch_size must be at least 1");
    for (int d : cfg.hidden_dims)
        require(d >= 1, ErrorCategory::validation, "hidden dims must be positive");
}

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_history;  // one mean-squared-error entry per epoch
};

// Mini-batch Adam on MSE. Shuffle order and init are seeded, so identical
// (data, cfg) reproduce the model parameter-for-parameter.
inline TrainResult train(const std::vector<TrainSample>& data, const TrainConfig& cfg,
                         const std::string& extractor_id = {}) {
    validate(cfg);
    require(!data.empty(), ErrorCategory::validation, "train: empty data");
    const std::size_t dim = data.front().x.size();
    require(dim >= 1, ErrorCategory::validation, "train: empty feature vectors");
    for (const auto& s : data) {
        require(s.x.size() == dim, ErrorCategory::dimension, "train: ragged feature lengths");
        require(std::isfinite(s.y), ErrorCategory::validation, "train: non-finite target");
        for (double v : s.x)
            require(std::isfinite(v), ErrorCategory::validation, "train: non-finite feature");
    }

    std::vector<int> dims;
    dims.push_back(static_cast<int>(dim));
    for (int h : cfg.hidden_dims) dims.push_back(h);
    dims.push_back(1);

    TrainResult result;
    result.model = init_model(dims, extractor_id, cfg.seed);
    MlpModel& m = result.model;

    auto mg = detail::Gradients::zeros_like(m);
    auto vg = detail::Gradients::zeros_like(m);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    long long t = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng::Stream shuffle(rng::derive(cfg.seed, rng::hash_str("shuffle"),
                                        static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.next_below(i)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const double bsize = static_cast<double>(end - start);
            auto grads = detail::Gradients::zeros_like(m);
            for (std::size_t i = start; i < end; ++i) {
                const TrainSample& s = data[order[i]];
                const auto acts = detail::mlp_activations(m, s.x);
                const double err = acts.back()[0] - s.y;
                epoch_loss += err * err;
                detail::accumulate_gradients(m, acts, 2.0 * err / bsize, grads);
            }
            ++t;
            const double corr1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double corr2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            for (std::size_t l = 0; l < m.layer_count(); ++l) {
                auto step = [&](std::vector<double>& p, const std::vector<double>& g,
                                std::vector<double>& mm, std::vector<double>& vv) {
                    for (std::size_t k = 0; k < p.size(); ++k) {
                        mm[k] = cfg.beta1 * mm[k] + (1.0 - cfg.beta1) * g[k];
                        vv[k] = cfg.beta2 * vv[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                        p[k] -= cfg.learning_rate * (mm[k] / corr1) /
                                (std::sqrt(vv[k] / corr2) + cfg.adam_eps);
                    }
                };
                step(m.weights[l], grads.weights[l], mg.weights[l], vg.weights[l]);
                step(m.biases[l], grads.biases[l], mg.biases[l], vg.biases[l]);
            }
        }
        epoch_loss /= static_cast<double>(data.size());
        require(std::isfinite(epoch_loss), ErrorCategory::numeric,
                "train: loss diverged to non-finite at epoch " + std::to_string(epoch));
        result.loss_history.push_back(epoch_loss);
    }
    return result;
}

// Max relative error between backprop and central differences (h = 1e-5) on
// the squared error of one sample, over every parameter.
inline double grad_check(const MlpModel& model, const std::vector<double>& x, double y) {
    validate(model);
    MlpModel m = model;
    const auto acts = detail::mlp_activations(m, x);
    auto grads = detail::Gradients::zeros_like(m);
    detail::accumulate_gradients(m, acts, 2.0 * (acts.back()[0] - y), grads);

    const double h = 1e-5;
    auto loss = [&](const MlpModel& probe) {
        const double err = forward(probe, x) - y;
        return err * err;
    };
    double worst = 0.0;
    auto probe_param = [&](std::vector<double>& p, const std::vector<double>& g) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double saved = p[k];
            p[k] = saved + h;
            const double up = loss(m);
            p[k] = saved - h;
            const double down = loss(m);
            p[k] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double rel = std::abs(g[k] - numeric) /
                               std::max(std::abs(g[k]) + std::abs(numeric), 1e-8);
            worst = std::max(worst, rel);
        }
    };
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        probe_param(m.weights[l], grads.weights[l]);
        probe_param(m.biases[l], grads.biases[l]);
    }
    return worst;
}

struct EvalResult {
    double mse = 0.0;
    SpearmanResult rho;
};

inline EvalResult evaluate(const MlpModel& model, const std::vector<TrainSample>& data) {
    require(!data.empty(), ErrorCategory::validation, "evaluate: empty data");
    std::vector<double> preds, targets;
    preds.reserve(data.size());
    targets.reserve(data.size());
    double mse = 0.0;
    for (const auto& s : data) {
        const double p = forward(model, s.x);
        preds.push_back(p);
        targets.push_back(s.y);
        mse += (p - s.y) * (p - s.y);
    }
    mse /= static_cast<double>(data.size());
    return {mse, spearman(preds, targets)};
}

inline void save_model(const MlpModel& m, const std::string& path,
                       jsonl::json extra_header = jsonl::json::object()) {
    validate(m);
    jsonl::Writer w(path);
    jsonl::json header{{"format", "aqua-model"},
                       {"version", 1},
                       {"extractor_id", m.extractor_id},
                       {"layer_dims", m.layer_dims}};
    for (auto& [k, v] : extra_header.items()) header[k] = v;
    w.write(header);
    for (std::size_t l = 0; l < m.layer_count(); ++l)
        w.write({{"layer", l}, {"weights", m.weights[l]}, {"biases", m.biases[l]}});
}

inline MlpModel load_model(const std::string& path, jsonl::json* header_out = nullptr) {
    auto doc = jsonl::read_file(path, "aqua-model", 1);
    MlpModel m = jsonl::decode(path, [&] {
        MlpModel model;
        model.extractor_id = doc.header.at("extractor_id").get<std::string>();
        model.layer_dims = doc.header.at("layer_dims").get<std::vector<int>>();
        require(doc.records.size() == model.layer_dims.size() - 1, ErrorCategory::parse,
                path + ": layer record count disagrees with layer_dims");
        for (std::size_t l = 0; l < doc.records.size(); ++l) {
            const auto& j = doc.records[l];
            require(j.at("layer").get<std::size_t>() == l, ErrorCategory::parse,
                    path + ": layer records out of order");
            model.weights.push_back(j.at("weights").get<std::vector<double>>());
            model.biases.push_back(j.at("biases").get<std::vector<double>>());
        }
        return model;
    });
    validate(m);
    if (header_out) *header_out = doc.header;
    return m;
}

}  // namespace aqua
