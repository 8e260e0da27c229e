// Feed-forward networks: sigmoid hidden layers with a softmax or linear
// output, mini-batch SGD training (cross-entropy or MSE), and a versioned
// binary weight container with a JSON metadata sidecar.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "pvc/common.hpp"
#include "pvc/errors.hpp"
#include "json.hpp"

namespace pvc {

enum class OutputKind : uint8_t { Softmax = 0, Linear = 1 };

/// Weights and normalization statistics for one feed-forward network.
/// Inputs are normalized as (x - in_mean) / in_scale before the first layer;
/// linear outputs are de-normalized as y * out_scale + out_mean.
struct MlpWeights {
    std::vector<int> layer_dims;
    OutputKind output_kind = OutputKind::Softmax;
    // weights[l] is layer_dims[l+1] x layer_dims[l], row-major; biases[l] matches rows.
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<double> in_mean, in_scale;
    std::vector<double> out_mean, out_scale;

    int input_dim() const { return layer_dims.empty() ? 0 : layer_dims.front(); }
    int output_dim() const { return layer_dims.empty() ? 0 : layer_dims.back(); }

    size_t parameter_count() const {
        size_t n = 0;
        for (size_t l = 0; l + 1 < layer_dims.size(); ++l)
            n += static_cast<size_t>(layer_dims[l]) * layer_dims[l + 1] + layer_dims[l + 1];
        return n;
    }
};

/// Sum of per-layer weight and bias counts for the given layer sizes.
inline size_t count_parameters(const std::vector<int>& dims) {
    size_t n = 0;
    for (size_t l = 0; l + 1 < dims.size(); ++l)
        n += static_cast<size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
    return n;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void softmax_inplace(std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

/// Xavier-style uniform init with a fixed seed.
inline MlpWeights init_mlp(const std::vector<int>& dims, OutputKind kind, Rng& rng) {
    if (dims.size() < 2) throw DimensionError("network needs at least two layer dims");
    MlpWeights w;
    w.layer_dims = dims;
    w.output_kind = kind;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        int rows = dims[l + 1], cols = dims[l];
        double bound = std::sqrt(6.0 / (rows + cols));
        std::vector<double> m(static_cast<size_t>(rows) * cols);
        for (auto& x : m) x = rng.uniform(-bound, bound);
        w.weights.push_back(std::move(m));
        w.biases.emplace_back(rows, 0.0);
    }
    w.in_mean.assign(dims.front(), 0.0);
    w.in_scale.assign(dims.front(), 1.0);
    w.out_mean.assign(dims.back(), 0.0);
    w.out_scale.assign(dims.back(), 1.0);
    return w;
}

namespace detail {

// Forward pass keeping the post-activation of every layer (for backprop).
// acts[0] is the normalized input; acts.back() is the raw output before
// softmax/de-normalization.
inline void forward_layers(const MlpWeights& w, const std::vector<double>& input,
                           std::vector<std::vector<double>>& acts) {
    size_t n_layers = w.weights.size();
    acts.resize(n_layers + 1);
    acts[0].resize(input.size());
    for (size_t i = 0; i < input.size(); ++i)
        acts[0][i] = (input[i] - w.in_mean[i]) / w.in_scale[i];
    for (size_t l = 0; l < n_layers; ++l) {
        int rows = w.layer_dims[l + 1], cols = w.layer_dims[l];
        acts[l + 1].assign(rows, 0.0);
        const auto& W = w.weights[l];
        const auto& prev = acts[l];
        for (int r = 0; r < rows; ++r) {
            double acc = w.biases[l][static_cast<size_t>(r)];
            const double* wr = &W[static_cast<size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) acc += wr[c] * prev[static_cast<size_t>(c)];
            acts[l + 1][static_cast<size_t>(r)] =
                (l + 1 < n_layers) ? sigmoid(acc) : acc;
        }
    }
}

}  // namespace detail

/// Single forward pass. Softmax nets return probabilities; linear nets return
/// de-normalized outputs.
inline std::vector<double> mlp_forward(const MlpWeights& w, const std::vector<double>& input) {
    if (static_cast<int>(input.size()) != w.input_dim())
        throw DimensionError("mlp_forward: input dim " + std::to_string(input.size()) +
                             " != " + std::to_string(w.input_dim()));
    std::vector<std::vector<double>> acts;
    detail::forward_layers(w, input, acts);
    std::vector<double> out = acts.back();
    if (w.output_kind == OutputKind::Softmax) {
        softmax_inplace(out);
    } else {
        for (size_t i = 0; i < out.size(); ++i)
            out[i] = out[i] * w.out_scale[i] + w.out_mean[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    std::vector<int> layer_dims;
    OutputKind output_kind = OutputKind::Softmax;
    double learning_rate = 0.1;
    int batch_size = 16;
    int max_epochs = 100;
    int patience = 3;          // early stop after this many non-improving epochs
    double cv_fraction = 0.1;  // held out for cross-validation when cv set absent
    uint64_t seed = 1;
    bool normalize_input = true;
    bool normalize_output = false;  // for linear nets: train in normalized space
};

struct TrainLog {
    std::vector<double> cv_loss_per_epoch;  // best-so-far curve, non-increasing
    int epochs_run = 0;
};

using Sample = std::pair<std::vector<double>, std::vector<double>>;

namespace detail {

inline double sample_loss(const MlpWeights& w, const std::vector<double>& target,
                          const std::vector<double>& raw_out) {
    if (w.output_kind == OutputKind::Softmax) {
        std::vector<double> p = raw_out;
        softmax_inplace(p);
        double loss = 0.0;
        for (size_t i = 0; i < p.size(); ++i)
            if (target[i] > 0.0) loss -= target[i] * std::log(std::max(p[i], 1e-300));
        return loss;
    }
    double loss = 0.0;
    for (size_t i = 0; i < raw_out.size(); ++i) {
        double d = raw_out[i] - target[i];
        loss += 0.5 * d * d;
    }
    return loss;
}

// Accumulates parameter gradients for one sample into gw/gb.
// For softmax + cross-entropy and linear + MSE the output delta is
// (prediction - target) in both cases.
inline double backprop_sample(const MlpWeights& w, const std::vector<double>& input,
                              const std::vector<double>& target,
                              std::vector<std::vector<double>>& gw,
                              std::vector<std::vector<double>>& gb) {
    std::vector<std::vector<double>> acts;
    forward_layers(w, input, acts);
    size_t n_layers = w.weights.size();
    double loss = sample_loss(w, target, acts.back());

    std::vector<double> delta = acts.back();
    if (w.output_kind == OutputKind::Softmax) softmax_inplace(delta);
    for (size_t i = 0; i < delta.size(); ++i) delta[i] -= target[i];

    for (size_t l = n_layers; l-- > 0;) {
        int rows = w.layer_dims[l + 1], cols = w.layer_dims[l];
        const auto& prev = acts[l];
        for (int r = 0; r < rows; ++r) {
            double d = delta[static_cast<size_t>(r)];
            gb[l][static_cast<size_t>(r)] += d;
            double* gwr = &gw[l][static_cast<size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) gwr[c] += d * prev[static_cast<size_t>(c)];
        }
        if (l == 0) break;
        std::vector<double> next_delta(cols, 0.0);
        const auto& W = w.weights[l];
        for (int r = 0; r < rows; ++r) {
            double d = delta[static_cast<size_t>(r)];
            const double* wr = &W[static_cast<size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) next_delta[static_cast<size_t>(c)] += d * wr[c];
        }
        // Sigmoid derivative on the hidden activation.
        for (int c = 0; c < cols; ++c) {
            double a = prev[static_cast<size_t>(c)];
            next_delta[static_cast<size_t>(c)] *= a * (1.0 - a);
        }
        delta = std::move(next_delta);
    }
    return loss;
}

inline double dataset_loss(const MlpWeights& w, const std::vector<const Sample*>& set) {
    if (set.empty()) return 0.0;
    double total = 0.0;
    std::vector<std::vector<double>> acts;
    for (const Sample* s : set) {
        forward_layers(w, s->first, acts);
        total += sample_loss(w, s->second, acts.back());
    }
    return total / static_cast<double>(set.size());
}

}  // namespace detail

/// Numerical gradient check helper: returns (analytic, numeric) gradients for
/// a flat view of all parameters on one sample. Used by property tests.
inline std::pair<std::vector<double>, std::vector<double>> mlp_gradients(
    MlpWeights w, const Sample& sample, double eps = 1e-5) {
    std::vector<std::vector<double>> gw, gb;
    gw.resize(w.weights.size());
    gb.resize(w.biases.size());
    for (size_t l = 0; l < w.weights.size(); ++l) {
        gw[l].assign(w.weights[l].size(), 0.0);
        gb[l].assign(w.biases[l].size(), 0.0);
    }
    detail::backprop_sample(w, sample.first, sample.second, gw, gb);

    std::vector<double> analytic, numeric;
    std::vector<std::vector<double>> acts;
    auto loss_at = [&]() {
        detail::forward_layers(w, sample.first, acts);
        return detail::sample_loss(w, sample.second, acts.back());
    };
    for (size_t l = 0; l < w.weights.size(); ++l) {
        for (size_t i = 0; i < w.weights[l].size(); ++i) {
            analytic.push_back(gw[l][i]);
            double save = w.weights[l][i];
            w.weights[l][i] = save + eps;
            double lp = loss_at();
            w.weights[l][i] = save - eps;
            double lm = loss_at();
            w.weights[l][i] = save;
            numeric.push_back((lp - lm) / (2.0 * eps));
        }
        for (size_t i = 0; i < w.biases[l].size(); ++i) {
            analytic.push_back(gb[l][i]);
            double save = w.biases[l][i];
            w.biases[l][i] = save + eps;
            double lp = loss_at();
            w.biases[l][i] = save - eps;
            double lm = loss_at();
            w.biases[l][i] = save;
            numeric.push_back((lp - lm) / (2.0 * eps));
        }
    }
    return {analytic, numeric};
}

/// Mini-batch SGD with early stopping on a cross-validation split. Returns
/// the best-CV weights. Reproducible for a fixed config seed.
inline MlpWeights train_mlp(const std::vector<Sample>& data, const TrainConfig& cfg,
                            TrainLog* log = nullptr) {
    if (data.empty()) throw EmptyCorpus("train_mlp: no data");
    Rng rng(cfg.seed);
    MlpWeights w = init_mlp(cfg.layer_dims, cfg.output_kind, rng);

    int in_dim = cfg.layer_dims.front(), out_dim = cfg.layer_dims.back();
    for (const auto& s : data)
        if (static_cast<int>(s.first.size()) != in_dim ||
            static_cast<int>(s.second.size()) != out_dim)
            throw DimensionError("train_mlp: sample dims do not match layer dims");

    if (cfg.normalize_input) {
        std::vector<double> mean(in_dim, 0.0), var(in_dim, 0.0);
        for (const auto& s : data)
            for (int i = 0; i < in_dim; ++i) mean[static_cast<size_t>(i)] += s.first[static_cast<size_t>(i)];
        for (auto& m : mean) m /= static_cast<double>(data.size());
        for (const auto& s : data)
            for (int i = 0; i < in_dim; ++i) {
                double d = s.first[static_cast<size_t>(i)] - mean[static_cast<size_t>(i)];
                var[static_cast<size_t>(i)] += d * d;
            }
        for (int i = 0; i < in_dim; ++i) {
            w.in_mean[static_cast<size_t>(i)] = mean[static_cast<size_t>(i)];
            w.in_scale[static_cast<size_t>(i)] =
                std::max(std::sqrt(var[static_cast<size_t>(i)] / data.size()), 1e-8);
        }
    }
    // Targets are trained in normalized space for linear nets.
    std::vector<Sample> train_data = data;
    if (cfg.output_kind == OutputKind::Linear && cfg.normalize_output) {
        std::vector<double> mean(out_dim, 0.0), var(out_dim, 0.0);
        for (const auto& s : data)
            for (int i = 0; i < out_dim; ++i) mean[static_cast<size_t>(i)] += s.second[static_cast<size_t>(i)];
        for (auto& m : mean) m /= static_cast<double>(data.size());
        for (const auto& s : data)
            for (int i = 0; i < out_dim; ++i) {
                double d = s.second[static_cast<size_t>(i)] - mean[static_cast<size_t>(i)];
                var[static_cast<size_t>(i)] += d * d;
            }
        for (int i = 0; i < out_dim; ++i) {
            w.out_mean[static_cast<size_t>(i)] = mean[static_cast<size_t>(i)];
            w.out_scale[static_cast<size_t>(i)] =
                std::max(std::sqrt(var[static_cast<size_t>(i)] / data.size()), 1e-8);
        }
        for (auto& s : train_data)
            for (int i = 0; i < out_dim; ++i)
                s.second[static_cast<size_t>(i)] =
                    (s.second[static_cast<size_t>(i)] - w.out_mean[static_cast<size_t>(i)]) /
                    w.out_scale[static_cast<size_t>(i)];
    }

    // Deterministic CV split from the shuffled index order.
    std::vector<size_t> order(train_data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    size_t n_cv = static_cast<size_t>(std::floor(cfg.cv_fraction * train_data.size()));
    if (train_data.size() >= 10 && n_cv == 0) n_cv = 1;
    std::vector<const Sample*> cv_set, tr_set;
    for (size_t i = 0; i < order.size(); ++i)
        (i < n_cv ? cv_set : tr_set).push_back(&train_data[order[i]]);
    if (tr_set.empty()) std::swap(tr_set, cv_set);
    const auto& eval_set = cv_set.empty() ? tr_set : cv_set;

    std::vector<std::vector<double>> gw(w.weights.size()), gb(w.biases.size());
    for (size_t l = 0; l < w.weights.size(); ++l) {
        gw[l].assign(w.weights[l].size(), 0.0);
        gb[l].assign(w.biases[l].size(), 0.0);
    }

    MlpWeights best = w;
    double best_loss = detail::dataset_loss(w, eval_set);
    int stale = 0;
    if (log) {
        log->cv_loss_per_epoch.clear();
        log->epochs_run = 0;
    }

    std::vector<size_t> idx(tr_set.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(idx);
        for (size_t start = 0; start < idx.size(); start += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(idx.size(), start + static_cast<size_t>(cfg.batch_size));
            for (size_t l = 0; l < gw.size(); ++l) {
                std::fill(gw[l].begin(), gw[l].end(), 0.0);
                std::fill(gb[l].begin(), gb[l].end(), 0.0);
            }
            for (size_t i = start; i < end; ++i)
                detail::backprop_sample(w, tr_set[idx[i]]->first, tr_set[idx[i]]->second, gw, gb);
            double scale = cfg.learning_rate / static_cast<double>(end - start);
            for (size_t l = 0; l < w.weights.size(); ++l) {
                for (size_t i = 0; i < w.weights[l].size(); ++i) w.weights[l][i] -= scale * gw[l][i];
                for (size_t i = 0; i < w.biases[l].size(); ++i) w.biases[l][i] -= scale * gb[l][i];
            }
        }
        double loss = detail::dataset_loss(w, eval_set);
        if (!std::isfinite(loss)) throw TrainingDiverged("cv loss is not finite");
        if (loss < best_loss) {
            best_loss = loss;
            best = w;
            stale = 0;
        } else {
            ++stale;
        }
        if (log) {
            log->cv_loss_per_epoch.push_back(best_loss);
            log->epochs_run = epoch + 1;
        }
        if (stale >= cfg.patience) break;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Weight container: "PVCW" magic, version, dims, normalization statistics and
// row-major float32 matrices. A JSON sidecar (<path>.json) carries metadata.

constexpr uint16_t kWeightFormatVersion = 1;

inline std::vector<uint8_t> serialize_weights(const MlpWeights& w) {
    std::vector<uint8_t> b;
    b.insert(b.end(), {'P', 'V', 'C', 'W'});
    put_u16(b, kWeightFormatVersion);
    put_u8(b, static_cast<uint8_t>(w.output_kind));
    put_u8(b, static_cast<uint8_t>(w.layer_dims.size()));
    for (int d : w.layer_dims) put_u32(b, static_cast<uint32_t>(d));
    auto put_vec = [&](const std::vector<double>& v) {
        for (double x : v) put_f32(b, static_cast<float>(x));
    };
    put_vec(w.in_mean);
    put_vec(w.in_scale);
    put_vec(w.out_mean);
    put_vec(w.out_scale);
    for (size_t l = 0; l < w.weights.size(); ++l) {
        put_vec(w.weights[l]);
        put_vec(w.biases[l]);
    }
    return b;
}

inline MlpWeights deserialize_weights(const std::vector<uint8_t>& bytes,
                                      const std::string& origin = "weights") {
    ByteReader r(bytes);
    try {
        if (std::memcmp(r.take(4), "PVCW", 4) != 0)
            throw CorruptStream(origin + ": bad magic");
        uint16_t ver = r.u16();
        if (ver != kWeightFormatVersion)
            throw CorruptStream(origin + ": unsupported version");
        MlpWeights w;
        w.output_kind = static_cast<OutputKind>(r.u8());
        int n_dims = r.u8();
        if (n_dims < 2) throw CorruptStream(origin + ": bad layer count");
        w.layer_dims.resize(static_cast<size_t>(n_dims));
        for (auto& d : w.layer_dims) d = static_cast<int>(r.u32());
        auto get_vec = [&](size_t n) {
            std::vector<double> v(n);
            for (auto& x : v) x = r.f32();
            return v;
        };
        size_t in_dim = static_cast<size_t>(w.layer_dims.front());
        size_t out_dim = static_cast<size_t>(w.layer_dims.back());
        w.in_mean = get_vec(in_dim);
        w.in_scale = get_vec(in_dim);
        w.out_mean = get_vec(out_dim);
        w.out_scale = get_vec(out_dim);
        for (size_t l = 0; l + 1 < w.layer_dims.size(); ++l) {
            size_t rows = static_cast<size_t>(w.layer_dims[l + 1]);
            size_t cols = static_cast<size_t>(w.layer_dims[l]);
            w.weights.push_back(get_vec(rows * cols));
            w.biases.push_back(get_vec(rows));
        }
        return w;
    } catch (const std::out_of_range&) {
        throw CorruptStream(origin + ": truncated weight file");
    }
}

inline void save_weights(const std::string& path, const MlpWeights& w,
                         const nlohmann::json& metadata = {}) {
    auto bytes = serialize_weights(w);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    nlohmann::json meta = metadata;
    meta["format_version"] = kWeightFormatVersion;
    meta["layer_dims"] = w.layer_dims;
    meta["output_kind"] = w.output_kind == OutputKind::Softmax ? "softmax" : "linear";
    meta["parameter_count"] = w.parameter_count();
    std::ofstream mf(path + ".json");
    if (!mf) throw ConfigError("cannot write " + path + ".json");
    mf << meta.dump(2) << "\n";
}

inline MlpWeights load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return deserialize_weights(bytes, path);
}

}  // namespace pvc
