#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evogen/dataset.hpp"
#include "evogen/rng.hpp"

namespace evogen {

enum class Activation { LeakyRelu, Relu };

struct EarlyStopping {
    double holdout_fraction = 0.2;
    int patience = 20;
};

struct MlpConfig {
    std::vector<int> layer_sizes;  // input, hidden..., output
    Activation hidden_activation = Activation::LeakyRelu;
    double leaky_slope = 0.01;
    double learning_rate = 0.1;
    int max_epochs = 100;
    double l2_lambda = 0.0;
    double dropout_rate = 0.0;
    std::optional<EarlyStopping> early_stopping;
    std::uint64_t seed = 0;
};

// Feedforward fully connected network. weights[l] is row-major
// (layer_sizes[l+1] x layer_sizes[l]).
struct MlpModel {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    MlpConfig config;

    int n_layers() const { return static_cast<int>(config.layer_sizes.size()); }
};

struct TrainReport {
    int epochs_run = 0;
    double final_train_mse = 0.0;
    bool stopped_early = false;
    std::vector<double> loss_history;  // training MSE per epoch
};

// Raised when the training loss leaves the finite range; usually means the
// learning rate is too high for the data.
struct TrainingDivergence : std::runtime_error {
    int epoch;
    explicit TrainingDivergence(int epoch_)
        : std::runtime_error("training diverged (non-finite loss) at epoch " + std::to_string(epoch_)),
          epoch(epoch_) {}
};

inline void validate_config(const MlpConfig& cfg) {
    if (cfg.layer_sizes.size() < 2) throw std::runtime_error("MlpConfig: need at least input and output layers");
    for (int s : cfg.layer_sizes) {
        if (s < 1) throw std::runtime_error("MlpConfig: layer sizes must be positive");
    }
    if (!(cfg.learning_rate > 0)) throw std::runtime_error("MlpConfig: learning_rate must be positive");
    if (cfg.max_epochs < 1) throw std::runtime_error("MlpConfig: max_epochs must be positive");
    if (cfg.l2_lambda < 0) throw std::runtime_error("MlpConfig: l2_lambda must be non-negative");
    if (!(cfg.dropout_rate >= 0 && cfg.dropout_rate < 1)) throw std::runtime_error("MlpConfig: dropout_rate in [0,1)");
    if (cfg.hidden_activation == Activation::LeakyRelu && !(cfg.leaky_slope > 0 && cfg.leaky_slope < 1)) {
        throw std::runtime_error("MlpConfig: leaky_slope must be in (0,1)");
    }
    if (cfg.early_stopping) {
        if (!(cfg.early_stopping->holdout_fraction > 0 && cfg.early_stopping->holdout_fraction < 1)) {
            throw std::runtime_error("MlpConfig: holdout_fraction must be in (0,1)");
        }
        if (cfg.early_stopping->patience < 1) throw std::runtime_error("MlpConfig: patience must be positive");
    }
}

// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
inline MlpModel init(const MlpConfig& cfg) {
    validate_config(cfg);
    MlpModel m;
    m.config = cfg;
    rng::Stream stream(rng::mix(cfg.seed, rng::kTagWeightInit));
    const int L = static_cast<int>(cfg.layer_sizes.size()) - 1;
    m.weights.resize(L);
    m.biases.resize(L);
    for (int l = 0; l < L; ++l) {
        const int fan_in = cfg.layer_sizes[l];
        const int fan_out = cfg.layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        m.weights[l].resize(static_cast<std::size_t>(fan_out) * fan_in);
        for (double& w : m.weights[l]) w = stream.uniform(-bound, bound);
        m.biases[l].assign(fan_out, 0.0);
    }
    return m;
}

namespace detail {

inline double activate(double z, Activation act, double slope) {
    if (z >= 0) return z;
    return act == Activation::LeakyRelu ? slope * z : 0.0;
}

inline double activate_deriv(double z, Activation act, double slope) {
    if (z > 0) return 1.0;
    return act == Activation::LeakyRelu ? slope : 0.0;
}

// Scratch buffers reused across instances and epochs.
struct MlpWorkspace {
    std::vector<std::vector<double>> zs;      // pre-activations per non-input layer
    std::vector<std::vector<double>> acts;    // post-activation (post-dropout) per non-input layer
    std::vector<std::vector<double>> deltas;  // dJ/dz per non-input layer
    std::vector<std::vector<double>> masks;   // dropout scale per hidden layer

    explicit MlpWorkspace(const std::vector<int>& layer_sizes) {
        const int L = static_cast<int>(layer_sizes.size()) - 1;
        zs.resize(L);
        acts.resize(L);
        deltas.resize(L);
        masks.resize(L);
        for (int l = 0; l < L; ++l) {
            zs[l].assign(layer_sizes[l + 1], 0.0);
            acts[l].assign(layer_sizes[l + 1], 0.0);
            deltas[l].assign(layer_sizes[l + 1], 0.0);
            masks[l].assign(layer_sizes[l + 1], 1.0);
        }
    }
};

// Forward pass into ws.acts; softmax on the output layer with max-subtraction.
// Dropout masks in ws.masks are applied to hidden activations.
inline void forward_ws(const MlpModel& m, const double* x, MlpWorkspace& ws, bool use_masks) {
    const auto& sizes = m.config.layer_sizes;
    const int L = static_cast<int>(sizes.size()) - 1;
    const double* input = x;
    for (int l = 0; l < L; ++l) {
        const int in_n = sizes[l];
        const int out_n = sizes[l + 1];
        const double* W = m.weights[l].data();
        for (int i = 0; i < out_n; ++i) {
            double z = m.biases[l][i];
            const double* wrow = W + static_cast<std::size_t>(i) * in_n;
            for (int j = 0; j < in_n; ++j) z += wrow[j] * input[j];
            ws.zs[l][i] = z;
        }
        if (l < L - 1) {
            for (int i = 0; i < out_n; ++i) {
                double a = activate(ws.zs[l][i], m.config.hidden_activation, m.config.leaky_slope);
                if (use_masks) a *= ws.masks[l][i];
                ws.acts[l][i] = a;
            }
        } else {
            double zmax = ws.zs[l][0];
            for (int i = 1; i < out_n; ++i) zmax = std::max(zmax, ws.zs[l][i]);
            double sum = 0.0;
            for (int i = 0; i < out_n; ++i) {
                const double e = std::exp(ws.zs[l][i] - zmax);
                ws.acts[l][i] = e;
                sum += e;
            }
            for (int i = 0; i < out_n; ++i) ws.acts[l][i] /= sum;
        }
        input = ws.acts[l].data();
    }
}

}  // namespace detail

inline std::vector<double> forward(const MlpModel& m, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.config.layer_sizes.front()) {
        throw std::runtime_error("forward: input size " + std::to_string(x.size()) + " does not match input layer " +
                                 std::to_string(m.config.layer_sizes.front()));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw std::runtime_error("forward: non-finite input value");
    }
    detail::MlpWorkspace ws(m.config.layer_sizes);
    detail::forward_ws(m, x.data(), ws, false);
    return ws.acts.back();
}

namespace detail {

inline void check_data_dims(const MlpModel& m, const Dataset& data, const char* who) {
    if (data.n_instances() == 0) throw std::runtime_error(std::string(who) + ": empty dataset");
    if (data.n_attributes != m.config.layer_sizes.front()) {
        throw std::runtime_error(std::string(who) + ": attribute count does not match input layer");
    }
    if (data.n_classes != m.config.layer_sizes.back()) {
        throw std::runtime_error(std::string(who) + ": class count does not match output layer");
    }
}

// Accumulates the gradient of MSE over `data` into grad_w/grad_b (which must
// be zeroed by the caller) and returns the MSE itself. Gradients and loss
// share one pass; dropout masks are redrawn per instance when drop_stream is
// non-null.
inline double accumulate_gradient(const MlpModel& m, const Dataset& data, MlpWorkspace& ws,
                                  std::vector<std::vector<double>>& grad_w, std::vector<std::vector<double>>& grad_b,
                                  rng::Stream* drop_stream) {
    const auto& sizes = m.config.layer_sizes;
    const int L = static_cast<int>(sizes.size()) - 1;
    const int k = sizes.back();
    const int n = data.n_instances();
    const double scale = 2.0 / (static_cast<double>(n) * k);
    const double keep = 1.0 - m.config.dropout_rate;
    double sq_sum = 0.0;

    for (int inst = 0; inst < n; ++inst) {
        if (drop_stream) {
            for (int l = 0; l < L - 1; ++l) {
                for (double& mask : ws.masks[l]) {
                    mask = drop_stream->uniform() < m.config.dropout_rate ? 0.0 : 1.0 / keep;
                }
            }
        }
        const double* x = data.row(inst);
        forward_ws(m, x, ws, drop_stream != nullptr);

        // output delta through softmax: dJ/dz_l = scale * p_l * ((p_l - y_l) - sum_j (p_j - y_j) p_j)
        const auto& p = ws.acts[L - 1];
        const int y = data.labels[inst];
        double dot = 0.0;
        for (int j = 0; j < k; ++j) {
            const double g = p[j] - (j == y ? 1.0 : 0.0);
            sq_sum += g * g;
            dot += g * p[j];
        }
        for (int l = 0; l < k; ++l) {
            const double g = p[l] - (l == y ? 1.0 : 0.0);
            ws.deltas[L - 1][l] = scale * p[l] * (g - dot);
        }

        for (int l = L - 1; l >= 0; --l) {
            const int in_n = sizes[l];
            const int out_n = sizes[l + 1];
            const double* prev_act = l == 0 ? x : ws.acts[l - 1].data();
            const auto& delta = ws.deltas[l];
            double* gw = grad_w[l].data();
            for (int i = 0; i < out_n; ++i) {
                const double d = delta[i];
                grad_b[l][i] += d;
                double* gw_row = gw + static_cast<std::size_t>(i) * in_n;
                for (int j = 0; j < in_n; ++j) gw_row[j] += d * prev_act[j];
            }
            if (l > 0) {
                auto& delta_prev = ws.deltas[l - 1];
                const double* W = m.weights[l].data();
                for (int j = 0; j < in_n; ++j) delta_prev[j] = 0.0;
                for (int i = 0; i < out_n; ++i) {
                    const double d = delta[i];
                    const double* wrow = W + static_cast<std::size_t>(i) * in_n;
                    for (int j = 0; j < in_n; ++j) delta_prev[j] += d * wrow[j];
                }
                for (int j = 0; j < in_n; ++j) {
                    double factor = activate_deriv(ws.zs[l - 1][j], m.config.hidden_activation, m.config.leaky_slope);
                    if (drop_stream) factor *= ws.masks[l - 1][j];
                    delta_prev[j] *= factor;
                }
            }
        }
    }
    return sq_sum / (static_cast<double>(n) * k);
}

// Stratified holdout for early stopping; never takes the last instance of a
// class. Returns (train_idx, holdout_idx); holdout may come back empty, in
// which case early stopping is a no-op.
inline std::pair<std::vector<int>, std::vector<int>> holdout_split(const Dataset& data, double fraction,
                                                                   std::uint64_t seed) {
    const auto counts = data.class_counts();
    rng::Stream stream(rng::mix(seed, rng::kTagHoldout));
    std::vector<int> train_idx, holdout_idx;
    for (int c = 0; c < data.n_classes; ++c) {
        std::vector<int> members;
        for (int i = 0; i < data.n_instances(); ++i) {
            if (data.labels[i] == c) members.push_back(i);
        }
        long long take = std::llround(fraction * counts[c]);
        take = std::min<long long>(take, counts[c] - 1);
        if (take < 0) take = 0;
        stream.shuffle(members);
        holdout_idx.insert(holdout_idx.end(), members.begin(), members.begin() + take);
        train_idx.insert(train_idx.end(), members.begin() + take, members.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(holdout_idx.begin(), holdout_idx.end());
    return {train_idx, holdout_idx};
}

}  // namespace detail

// Mean over instances and output dimensions of squared (one-hot - softmax).
inline double mse(const MlpModel& m, const Dataset& data) {
    detail::check_data_dims(m, data, "mse");
    detail::MlpWorkspace ws(m.config.layer_sizes);
    const int k = m.config.layer_sizes.back();
    double sq_sum = 0.0;
    for (int i = 0; i < data.n_instances(); ++i) {
        detail::forward_ws(m, data.row(i), ws, false);
        const auto& p = ws.acts.back();
        for (int j = 0; j < k; ++j) {
            const double g = p[j] - (j == data.labels[i] ? 1.0 : 0.0);
            sq_sum += g * g;
        }
    }
    return sq_sum / (static_cast<double>(data.n_instances()) * k);
}

// Fraction of instances whose argmax output matches the label; argmax ties
// break toward the lowest class index.
inline double accuracy(const MlpModel& m, const Dataset& data) {
    detail::check_data_dims(m, data, "accuracy");
    detail::MlpWorkspace ws(m.config.layer_sizes);
    const int k = m.config.layer_sizes.back();
    int correct = 0;
    for (int i = 0; i < data.n_instances(); ++i) {
        detail::forward_ws(m, data.row(i), ws, false);
        const auto& p = ws.acts.back();
        int best = 0;
        for (int j = 1; j < k; ++j) {
            if (p[j] > p[best]) best = j;
        }
        if (best == data.labels[i]) correct++;
    }
    return static_cast<double>(correct) / data.n_instances();
}

// Full-batch gradient descent on MSE with optional L2 penalty, dropout and
// early stopping. Dropout is disabled automatically when the effective
// training set has fewer than 10 instances (it erases the signal of the
// scarce-real baselines); early stopping degrades to plain training when the
// stratified holdout comes back empty.
inline std::pair<MlpModel, TrainReport> train(const MlpModel& model, const Dataset& data) {
    detail::check_data_dims(model, data, "train");
    validate_config(model.config);

    MlpModel m = model;
    const MlpConfig& cfg = m.config;
    TrainReport report;

    Dataset train_data;
    Dataset holdout_data;
    bool use_early_stop = false;
    if (cfg.early_stopping) {
        auto [train_idx, holdout_idx] = detail::holdout_split(data, cfg.early_stopping->holdout_fraction, cfg.seed);
        if (!holdout_idx.empty()) {
            use_early_stop = true;
            train_data = detail::subset(data, train_idx);
            holdout_data = detail::subset(data, holdout_idx);
        }
    }
    const Dataset& effective = use_early_stop ? train_data : data;

    const bool use_dropout = cfg.dropout_rate > 0 && effective.n_instances() >= 10;
    rng::Stream drop_stream(rng::mix(cfg.seed, rng::kTagDropout));

    detail::MlpWorkspace ws(cfg.layer_sizes);
    const int L = static_cast<int>(cfg.layer_sizes.size()) - 1;
    std::vector<std::vector<double>> grad_w(L), grad_b(L);
    for (int l = 0; l < L; ++l) {
        grad_w[l].assign(m.weights[l].size(), 0.0);
        grad_b[l].assign(m.biases[l].size(), 0.0);
    }

    std::vector<std::vector<double>> best_w, best_b;
    double best_holdout = std::numeric_limits<double>::infinity();
    int since_improve = 0;
    if (use_early_stop) {
        best_w = m.weights;
        best_b = m.biases;
        best_holdout = mse(m, holdout_data);
    }

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (int l = 0; l < L; ++l) {
            std::fill(grad_w[l].begin(), grad_w[l].end(), 0.0);
            std::fill(grad_b[l].begin(), grad_b[l].end(), 0.0);
        }
        const double epoch_mse =
            detail::accumulate_gradient(m, effective, ws, grad_w, grad_b, use_dropout ? &drop_stream : nullptr);
        if (!std::isfinite(epoch_mse)) throw TrainingDivergence(epoch + 1);
        report.loss_history.push_back(epoch_mse);
        report.epochs_run = epoch + 1;

        for (int l = 0; l < L; ++l) {
            double* W = m.weights[l].data();
            const double* gw = grad_w[l].data();
            const double two_l2 = 2.0 * cfg.l2_lambda;
            for (std::size_t i = 0; i < m.weights[l].size(); ++i) {
                W[i] -= cfg.learning_rate * (gw[i] + two_l2 * W[i]);
            }
            for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
                m.biases[l][i] -= cfg.learning_rate * grad_b[l][i];
            }
        }

        if (use_early_stop) {
            const double holdout_mse = mse(m, holdout_data);
            if (!std::isfinite(holdout_mse)) throw TrainingDivergence(epoch + 1);
            if (holdout_mse < best_holdout) {
                best_holdout = holdout_mse;
                best_w = m.weights;
                best_b = m.biases;
                since_improve = 0;
            } else if (++since_improve >= cfg.early_stopping->patience) {
                report.stopped_early = true;
                break;
            }
        }
    }

    if (use_early_stop) {
        m.weights = std::move(best_w);
        m.biases = std::move(best_b);
    }
    report.final_train_mse = report.loss_history.empty() ? 0.0 : report.loss_history.back();
    return {std::move(m), report};
}

// Compares the analytic gradient of the full objective (MSE + L2 penalty)
// against central finite differences for every parameter; returns the largest
// relative error. Dropout is forced off for the check.
inline double gradient_check(const MlpConfig& config, const Dataset& data, double epsilon) {
    MlpConfig cfg = config;
    cfg.dropout_rate = 0.0;
    cfg.early_stopping.reset();
    MlpModel m = init(cfg);
    detail::check_data_dims(m, data, "gradient_check");

    const int L = static_cast<int>(cfg.layer_sizes.size()) - 1;
    detail::MlpWorkspace ws(cfg.layer_sizes);
    std::vector<std::vector<double>> grad_w(L), grad_b(L);
    for (int l = 0; l < L; ++l) {
        grad_w[l].assign(m.weights[l].size(), 0.0);
        grad_b[l].assign(m.biases[l].size(), 0.0);
    }
    detail::accumulate_gradient(m, data, ws, grad_w, grad_b, nullptr);
    for (int l = 0; l < L; ++l) {
        for (std::size_t i = 0; i < m.weights[l].size(); ++i) grad_w[l][i] += 2.0 * cfg.l2_lambda * m.weights[l][i];
    }

    const auto objective = [&](const MlpModel& model) {
        double J = mse(model, data);
        for (int l = 0; l < L; ++l) {
            for (double w : model.weights[l]) J += cfg.l2_lambda * w * w;
        }
        return J;
    };

    double max_rel = 0.0;
    const auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + epsilon;
        const double j_plus = objective(m);
        param = saved - epsilon;
        const double j_minus = objective(m);
        param = saved;
        const double numeric = (j_plus - j_minus) / (2.0 * epsilon);
        const double rel = std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
        max_rel = std::max(max_rel, rel);
    };
    for (int l = 0; l < L; ++l) {
        for (std::size_t i = 0; i < m.weights[l].size(); ++i) probe(m.weights[l][i], grad_w[l][i]);
        for (std::size_t i = 0; i < m.biases[l].size(); ++i) probe(m.biases[l][i], grad_b[l][i]);
    }
    return max_rel;
}

// Debugging dump: layer sizes line, then per layer one line of row-major
// weights and one of biases, 17 significant digits.
inline void dump_model(const MlpModel& m, std::ostream& out) {
    for (std::size_t i = 0; i < m.config.layer_sizes.size(); ++i) {
        out << (i ? " " : "") << m.config.layer_sizes[i];
    }
    out << "\n";
    char buf[40];
    const auto write_row = [&](const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
            out << (i ? " " : "") << buf;
        }
        out << "\n";
    };
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        write_row(m.weights[l]);
        write_row(m.biases[l]);
    }
}

}  // namespace evogen
