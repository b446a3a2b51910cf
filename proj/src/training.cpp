#include "chebmixer/training.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "chebmixer/rng.hpp"

namespace chebmixer {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw std::invalid_argument("config: lr must be positive");
    if (weight_decay < 0.0) throw std::invalid_argument("config: weight_decay must be >= 0");
    if (patience < 1) throw std::invalid_argument("config: patience must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("config: max_epochs must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("config: betas must lie in [0, 1)");
    }
    if (eps <= 0.0) throw std::invalid_argument("config: eps must be positive");
    if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0)) {
        throw std::invalid_argument("config: split fractions must be positive");
    }
    if (train_frac + val_frac + test_frac > 1.0 + 1e-12) {
        throw std::invalid_argument("config: split fractions must sum to at most 1");
    }
}

OptimizerState OptimizerState::init(const ModelParams& params) {
    OptimizerState s;
    for (const ParamRef& r : param_refs(params)) {
        s.m.push_back(Tensor::zeros(r.tensor->shape));
        s.v.push_back(Tensor::zeros(r.tensor->shape));
    }
    return s;
}

double cross_entropy(const Tensor& logits, const std::vector<int64_t>& labels,
                     const std::vector<int64_t>& mask) {
    Tape tape;
    const Var l = tape.leaf(logits, false);
    return tape.value(tape.cross_entropy(l, labels, mask)).at(0);
}

void adamw_step(const std::vector<ParamRef>& params, const std::vector<Tensor>& grads,
                OptimizerState& state, const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adamw_step: parameter/gradient/state count mismatch");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p].tensor;
        const Tensor& g = grads[p];
        if (!g.same_shape(theta)) {
            throw std::invalid_argument("adamw_step: gradient shape mismatch for " + params[p].name);
        }
        if (!g.all_finite()) {
            throw std::runtime_error("adamw_step: non-finite gradient in " + params[p].name);
        }
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        const double wd = params[p].decay ? cfg.weight_decay : 0.0;
        const int64_t n = theta.numel();
        double* th = theta.ptr();
        double* mp = m.ptr();
        double* vp = v.ptr();
        const double* gp = g.ptr();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            mp[i] = cfg.beta1 * mp[i] + (1.0 - cfg.beta1) * gp[i];
            vp[i] = cfg.beta2 * vp[i] + (1.0 - cfg.beta2) * gp[i] * gp[i];
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            th[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps) + cfg.lr * wd * th[i];
        }
    }
}

std::vector<Split> make_splits(int64_t n, double train_frac, double val_frac, double test_frac,
                               uint64_t seed) {
    if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0) ||
        train_frac + val_frac + test_frac > 1.0 + 1e-12) {
        throw std::invalid_argument("make_splits: invalid fractions");
    }
    const int64_t n_val = static_cast<int64_t>(std::floor(val_frac * static_cast<double>(n)));
    const int64_t n_test = static_cast<int64_t>(std::floor(test_frac * static_cast<double>(n)));
    const int64_t n_train = n - n_val - n_test;
    if (n_train < 1 || n_val < 1 || n_test < 1) {
        throw std::invalid_argument("make_splits: a split would be empty for n=" + std::to_string(n));
    }
    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng = Rng::stream(seed, rng_stream::kSplits);
    for (int64_t i = n - 1; i > 0; --i) {
        const int64_t j = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(i + 1)));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    std::vector<Split> splits(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const int64_t node = order[static_cast<size_t>(i)];
        splits[static_cast<size_t>(node)] =
            (i < n_train) ? Split::Train : (i < n_train + n_val) ? Split::Val : Split::Test;
    }
    return splits;
}

double accuracy(const std::vector<int64_t>& preds, const std::vector<int64_t>& labels,
                const std::vector<int64_t>& mask) {
    if (mask.empty()) throw std::invalid_argument("accuracy: mask is empty");
    int64_t correct = 0;
    for (int64_t i : mask) {
        if (preds[static_cast<size_t>(i)] == labels[static_cast<size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

TrainResult train_loop(const Dataset& data, const TrainConfig& cfg, bool record_timing) {
    cfg.validate();
    data.validate();
    if (!data.has_splits()) {
        throw std::invalid_argument("train_loop: dataset has no split assignment");
    }
    ModelConfig model_cfg = cfg.model;
    model_cfg.classes = data.class_count;
    model_cfg.d_raw = data.d_raw();
    model_cfg.validate();

    const auto train_mask = data.split_indices(Split::Train);
    const auto val_mask = data.split_indices(Split::Val);
    if (train_mask.empty() || val_mask.empty()) {
        throw std::invalid_argument("train_loop: train and val splits must be non-empty");
    }

    const auto l_hat = build_scaled_laplacian(data.graph, model_cfg);
    ModelParams params = init_model(model_cfg, cfg.seed);
    OptimizerState opt = OptimizerState::init(params);

    TrainResult result;
    result.history.best_val_acc = -1.0;
    int64_t since_improve = 0;

    for (int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        Tape tape;
        const ModelVars vars = model_to_tape(tape, params, true);
        const Var logits = model_forward(tape, l_hat, data.features, vars, model_cfg);
        const Var loss = tape.cross_entropy(logits, data.labels, train_mask);
        const double loss_value = tape.value(loss).at(0);
        if (!std::isfinite(loss_value)) {
            throw std::runtime_error("train_loop: non-finite training loss at epoch " +
                                     std::to_string(epoch));
        }
        tape.backward(loss);
        std::vector<Tensor> grads;
        grads.reserve(vars.ordered.size());
        for (const Var v : vars.ordered) grads.push_back(tape.grad(v));
        adamw_step(param_refs(params), grads, opt, cfg);

        const Tensor eval_logits = model_logits(l_hat, data.features, params, model_cfg);
        const std::vector<int64_t> preds = predict(eval_logits);
        const double train_acc = accuracy(preds, data.labels, train_mask);
        const double val_acc = accuracy(preds, data.labels, val_mask);

        const auto t1 = std::chrono::steady_clock::now();
        const double seconds =
            record_timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
        result.history.records.push_back({epoch, loss_value, train_acc, val_acc, seconds});

        if (val_acc > result.history.best_val_acc) {
            result.history.best_val_acc = val_acc;
            result.history.best_epoch = epoch;
            result.best_params = params;
            since_improve = 0;
        } else {
            ++since_improve;
        }
        if (since_improve >= cfg.patience) break;
    }
    return result;
}

}  // namespace chebmixer
