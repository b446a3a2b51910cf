#include "chebmixer/mixer.hpp"

#include <cmath>

#include "chebmixer/rng.hpp"

namespace chebmixer {

namespace {

Tensor glorot(int64_t rows, int64_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor w = Tensor::zeros({rows, cols});
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    return w;
}

}  // namespace

MixerLayerParams init_mixer(int k_order, int64_t d, int64_t d_s, int64_t d_c, uint64_t seed) {
    if (k_order < 0 || d < 1 || d_s < 1 || d_c < 1) {
        throw std::invalid_argument("init_mixer: all extents must be positive");
    }
    const int64_t hops = k_order + 1;
    Rng rng = Rng::stream(seed, rng_stream::kParamInit);
    MixerLayerParams p;
    p.w1 = glorot(d_s, hops, rng);
    p.b1 = Tensor::zeros({d_s});
    p.w2 = glorot(hops, d_s, rng);
    p.b2 = Tensor::zeros({hops});
    p.w3 = glorot(d_c, d, rng);
    p.b3 = Tensor::zeros({d_c});
    p.w4 = glorot(d, d_c, rng);
    p.b4 = Tensor::zeros({d});
    p.ln1_gain = Tensor::ones({d});
    p.ln1_bias = Tensor::zeros({d});
    p.ln2_gain = Tensor::ones({d});
    p.ln2_bias = Tensor::zeros({d});
    return p;
}

MixerLayerVars mixer_to_tape(Tape& tape, const MixerLayerParams& p, bool requires_grad) {
    MixerLayerVars v;
    v.w1 = tape.leaf(p.w1, requires_grad);
    v.b1 = tape.leaf(p.b1, requires_grad);
    v.w2 = tape.leaf(p.w2, requires_grad);
    v.b2 = tape.leaf(p.b2, requires_grad);
    v.w3 = tape.leaf(p.w3, requires_grad);
    v.b3 = tape.leaf(p.b3, requires_grad);
    v.w4 = tape.leaf(p.w4, requires_grad);
    v.b4 = tape.leaf(p.b4, requires_grad);
    v.ln1_gain = tape.leaf(p.ln1_gain, requires_grad);
    v.ln1_bias = tape.leaf(p.ln1_bias, requires_grad);
    v.ln2_gain = tape.leaf(p.ln2_gain, requires_grad);
    v.ln2_bias = tape.leaf(p.ln2_bias, requires_grad);
    return v;
}

Var mixer_forward(Tape& tape, Var xg, const MixerLayerVars& v, bool use_biases) {
    const Var none{};
    // Token mixing: per node, W2 * gelu(W1 * LN(T) + b1) + b2 over the hop axis.
    Var y = tape.layer_norm(xg, v.ln1_gain, v.ln1_bias, kLayerNormEps);
    Var t = tape.batched_lmul(v.w1, y, use_biases ? v.b1 : none);
    t = tape.gelu(t);
    t = tape.batched_lmul(v.w2, t, use_biases ? v.b2 : none);
    xg = tape.add(xg, t);
    // Channel mixing: per node, (W4 * gelu(W3 * LN(T)^T + b3) + b4)^T, realized
    // as right-multiplications by the transposed weights.
    Var z = tape.layer_norm(xg, v.ln2_gain, v.ln2_bias, kLayerNormEps);
    Var u = tape.batched_rmul_t(z, v.w3, use_biases ? v.b3 : none);
    u = tape.gelu(u);
    u = tape.batched_rmul_t(u, v.w4, use_biases ? v.b4 : none);
    return tape.add(xg, u);
}

HopSequence mixer_forward(const HopSequence& xg, const MixerLayerParams& params, bool use_biases) {
    Tape tape;
    const Var in = tape.leaf(xg.data, false);
    const MixerLayerVars vars = mixer_to_tape(tape, params, false);
    const Var out = mixer_forward(tape, in, vars, use_biases);
    HopSequence res;
    res.data = tape.value(out);
    res.k_order = xg.k_order;
    res.source = xg.source;
    return res;
}

}  // namespace chebmixer
