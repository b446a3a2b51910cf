#pragma once

#include <cstdint>

#include "chebmixer/spectral.hpp"
#include "chebmixer/tape.hpp"
#include "chebmixer/tensor.hpp"

namespace chebmixer {

inline constexpr double kLayerNormEps = 1e-5;

/// One mixer layer: token mixing over the hop axis followed by channel
/// mixing over the feature axis, both under pre-norm residual branches.
struct MixerLayerParams {
    Tensor w1;  // d_s x (K+1)
    Tensor b1;  // d_s
    Tensor w2;  // (K+1) x d_s
    Tensor b2;  // K+1
    Tensor w3;  // d_c x d
    Tensor b3;  // d_c
    Tensor w4;  // d x d_c
    Tensor b4;  // d
    Tensor ln1_gain, ln1_bias;  // d
    Tensor ln2_gain, ln2_bias;  // d
};

/// Glorot-uniform weights, zero biases, unit layer-norm gains; deterministic
/// per seed.
MixerLayerParams init_mixer(int k_order, int64_t d, int64_t d_s, int64_t d_c, uint64_t seed);

struct MixerLayerVars {
    Var w1, b1, w2, b2, w3, b3, w4, b4;
    Var ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

MixerLayerVars mixer_to_tape(Tape& tape, const MixerLayerParams& params, bool requires_grad);

/// Applies the layer to an N x (K+1) x d hop sequence on the tape. When
/// use_biases is false the MLP bias adds are skipped, matching the
/// weights-only form of the mixing equations.
Var mixer_forward(Tape& tape, Var xg, const MixerLayerVars& vars, bool use_biases = true);

/// Convenience forward over plain tensors (tests and inspection).
HopSequence mixer_forward(const HopSequence& xg, const MixerLayerParams& params,
                          bool use_biases = true);

}  // namespace chebmixer
