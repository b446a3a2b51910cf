#include "chebmixer/model.hpp"

#include <cmath>
#include <stdexcept>

#include "chebmixer/rng.hpp"

namespace chebmixer {

void ModelConfig::validate() const {
    if (k_order < 0) throw std::invalid_argument("config: K must be >= 0");
    if (d < 1 || d_s < 1 || d_c < 1) throw std::invalid_argument("config: hidden dims must be >= 1");
    if (layers < 0) throw std::invalid_argument("config: layer count must be >= 0");
    if (classes < 1) throw std::invalid_argument("config: class count must be >= 1");
    if (d_raw < 1) throw std::invalid_argument("config: raw feature dim must be >= 1");
    if (lambda_mode == LambdaMaxMode::Fixed && lambda_fixed <= 0.0) {
        throw std::invalid_argument("config: fixed lambda_max must be positive");
    }
}

namespace {

Tensor glorot(int64_t rows, int64_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor w = Tensor::zeros({rows, cols});
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    return w;
}

}  // namespace

ModelParams init_model(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    ModelParams p;
    Rng rng = Rng::stream(seed, rng_stream::kParamInit);
    p.w_in = glorot(cfg.d, cfg.d_raw, rng);
    p.b_in = Tensor::zeros({cfg.d});
    for (int64_t i = 0; i < cfg.layers; ++i) {
        p.mixers.push_back(init_mixer(cfg.k_order, cfg.d, cfg.d_s, cfg.d_c,
                                      seed * 0x100 + 17 + static_cast<uint64_t>(i)));
    }
    if (cfg.uses_gamma()) {
        p.agg = init_gamma(cfg.k_order, cfg.gamma_cols(), seed);
    }
    p.w_out = glorot(cfg.classes, cfg.d, rng);
    p.b_out = Tensor::zeros({cfg.classes});
    return p;
}

std::vector<ParamRef> param_refs(ModelParams& p) {
    std::vector<ParamRef> refs;
    refs.push_back({"w_in", &p.w_in, true});
    refs.push_back({"b_in", &p.b_in, false});
    for (size_t i = 0; i < p.mixers.size(); ++i) {
        MixerLayerParams& m = p.mixers[i];
        const std::string pre = "mixer" + std::to_string(i) + ".";
        refs.push_back({pre + "w1", &m.w1, true});
        refs.push_back({pre + "b1", &m.b1, false});
        refs.push_back({pre + "w2", &m.w2, true});
        refs.push_back({pre + "b2", &m.b2, false});
        refs.push_back({pre + "w3", &m.w3, true});
        refs.push_back({pre + "b3", &m.b3, false});
        refs.push_back({pre + "w4", &m.w4, true});
        refs.push_back({pre + "b4", &m.b4, false});
        refs.push_back({pre + "ln1_gain", &m.ln1_gain, false});
        refs.push_back({pre + "ln1_bias", &m.ln1_bias, false});
        refs.push_back({pre + "ln2_gain", &m.ln2_gain, false});
        refs.push_back({pre + "ln2_bias", &m.ln2_bias, false});
    }
    if (!p.agg.gamma.empty()) refs.push_back({"gamma", &p.agg.gamma, true});
    refs.push_back({"w_out", &p.w_out, true});
    refs.push_back({"b_out", &p.b_out, false});
    return refs;
}

std::vector<ParamRef> param_refs(const ModelParams& p) {
    return param_refs(const_cast<ModelParams&>(p));
}

int64_t param_count(const ModelParams& p) {
    int64_t total = 0;
    for (const ParamRef& r : param_refs(p)) total += r.tensor->numel();
    return total;
}

ModelVars model_to_tape(Tape& tape, const ModelParams& p, bool requires_grad) {
    ModelVars v;
    v.w_in = tape.leaf(p.w_in, requires_grad);
    v.b_in = tape.leaf(p.b_in, requires_grad);
    for (const MixerLayerParams& m : p.mixers) {
        v.mixers.push_back(mixer_to_tape(tape, m, requires_grad));
    }
    if (!p.agg.gamma.empty()) v.gamma = tape.leaf(p.agg.gamma, requires_grad);
    v.w_out = tape.leaf(p.w_out, requires_grad);
    v.b_out = tape.leaf(p.b_out, requires_grad);

    v.ordered = {v.w_in, v.b_in};
    for (const MixerLayerVars& m : v.mixers) {
        v.ordered.insert(v.ordered.end(), {m.w1, m.b1, m.w2, m.b2, m.w3, m.b3, m.w4, m.b4,
                                           m.ln1_gain, m.ln1_bias, m.ln2_gain, m.ln2_bias});
    }
    if (v.gamma.valid()) v.ordered.push_back(v.gamma);
    v.ordered.push_back(v.w_out);
    v.ordered.push_back(v.b_out);
    return v;
}

namespace {

[[noreturn]] void stage_error(const std::string& stage, const std::exception& e) {
    throw ShapeError("model_forward[" + stage + "]: " + e.what());
}

}  // namespace

Var model_forward(Tape& tape, std::shared_ptr<const SparseLaplacian> l_hat, const Tensor& x_raw,
                  const ModelVars& vars, const ModelConfig& cfg) {
    Var x;
    try {
        const Var raw = tape.leaf(x_raw, false);
        x = tape.linear(raw, vars.w_in, vars.b_in);
    } catch (const ShapeError& e) {
        stage_error("projection", e);
    }
    Var xg;
    try {
        xg = tape.cheb_hops(std::move(l_hat), x, cfg.k_order);
    } catch (const ShapeError& e) {
        stage_error("hop-extraction", e);
    }
    for (size_t i = 0; i < vars.mixers.size(); ++i) {
        try {
            xg = mixer_forward(tape, xg, vars.mixers[i], cfg.mixer_biases);
        } catch (const ShapeError& e) {
            stage_error("mixer" + std::to_string(i), e);
        }
    }
    Var agg;
    try {
        switch (cfg.aggregator) {
            case AggregatorMode::ChebInterp:
            case AggregatorMode::ChebInterpShared: {
                const Var w = cheb_interp_weights(tape, vars.gamma, cfg.agg_halved_c0);
                agg = tape.aggregate(xg, w);
                break;
            }
            case AggregatorMode::Sum:
                agg = tape.hop_reduce(xg, HopReduceMode::Sum);
                break;
            case AggregatorMode::Mean:
                agg = tape.hop_reduce(xg, HopReduceMode::Mean);
                break;
            case AggregatorMode::Max:
                agg = tape.hop_reduce(xg, HopReduceMode::Max);
                break;
        }
    } catch (const ShapeError& e) {
        stage_error("aggregation", e);
    }
    try {
        return tape.linear(agg, vars.w_out, vars.b_out);
    } catch (const ShapeError& e) {
        stage_error("head", e);
    }
}

Tensor model_logits(std::shared_ptr<const SparseLaplacian> l_hat, const Tensor& x_raw,
                    const ModelParams& params, const ModelConfig& cfg) {
    Tape tape;
    const ModelVars vars = model_to_tape(tape, params, false);
    const Var logits = model_forward(tape, std::move(l_hat), x_raw, vars, cfg);
    return tape.value(logits);
}

std::vector<int64_t> predict(const Tensor& logits) {
    require_shape(logits.rank() == 2, "predict: logits must be 2-D, got " + shape_str(logits.shape));
    const int64_t n = logits.dim(0);
    const int64_t c = logits.dim(1);
    std::vector<int64_t> labels(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        int64_t best = 0;
        for (int64_t j = 1; j < c; ++j) {
            if (logits.at(i, j) > logits.at(i, best)) best = j;
        }
        labels[static_cast<size_t>(i)] = best;
    }
    return labels;
}

std::shared_ptr<const SparseLaplacian> build_scaled_laplacian(const CsrGraph& g,
                                                              const ModelConfig& cfg) {
    const SparseLaplacian lap = sym_norm_laplacian(g);
    const double lambda = (cfg.lambda_mode == LambdaMaxMode::Fixed)
                              ? cfg.lambda_fixed
                              : estimate_lambda_max(lap);
    return std::make_shared<const SparseLaplacian>(scale_laplacian(lap, lambda));
}

}  // namespace chebmixer
