#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "chebmixer/aggregator.hpp"
#include "chebmixer/graph.hpp"
#include "chebmixer/mixer.hpp"
#include "chebmixer/tape.hpp"

namespace chebmixer {

enum class LambdaMaxMode { Auto, Fixed };

struct ModelConfig {
    int k_order = 7;
    int64_t d = 64;
    int64_t layers = 1;
    int64_t d_s = 64;
    int64_t d_c = 64;
    int64_t classes = 0;  // from the dataset
    int64_t d_raw = 0;    // from the dataset
    AggregatorMode aggregator = AggregatorMode::ChebInterp;
    LambdaMaxMode lambda_mode = LambdaMaxMode::Auto;
    double lambda_fixed = 2.0;
    bool mixer_biases = true;
    bool agg_halved_c0 = false;

    bool uses_gamma() const {
        return aggregator == AggregatorMode::ChebInterp ||
               aggregator == AggregatorMode::ChebInterpShared;
    }
    int64_t gamma_cols() const {
        return aggregator == AggregatorMode::ChebInterpShared ? 1 : d;
    }
    void validate() const;
};

/// All trainable arrays: input projection, mixer stack, aggregator
/// coefficients and the classification head.
struct ModelParams {
    Tensor w_in;  // d x d_raw
    Tensor b_in;  // d
    std::vector<MixerLayerParams> mixers;
    AggregatorParams agg;  // empty tensor when the aggregator has no weights
    Tensor w_out;  // C x d
    Tensor b_out;  // C
};

ModelParams init_model(const ModelConfig& cfg, uint64_t seed);

int64_t param_count(const ModelParams& params);

/// Named view over all trainable tensors in fixed manifest order. `decay`
/// marks weight matrices; bias vectors and layer-norm parameters are exempt
/// from weight decay.
struct ParamRef {
    std::string name;
    Tensor* tensor;
    bool decay;
};
std::vector<ParamRef> param_refs(ModelParams& params);
std::vector<ParamRef> param_refs(const ModelParams& params);

struct ModelVars {
    Var w_in, b_in;
    std::vector<MixerLayerVars> mixers;
    Var gamma;
    Var w_out, b_out;
    std::vector<Var> ordered;  // same order as param_refs
};

ModelVars model_to_tape(Tape& tape, const ModelParams& params, bool requires_grad);

/// Full forward pass: projection -> Chebyshev hop extraction -> mixer stack
/// -> aggregation -> classification head. Shape errors name the stage.
Var model_forward(Tape& tape, std::shared_ptr<const SparseLaplacian> l_hat, const Tensor& x_raw,
                  const ModelVars& vars, const ModelConfig& cfg);

/// Convenience forward over plain tensors.
Tensor model_logits(std::shared_ptr<const SparseLaplacian> l_hat, const Tensor& x_raw,
                    const ModelParams& params, const ModelConfig& cfg);

/// Per-row argmax; ties resolve to the lowest class index.
std::vector<int64_t> predict(const Tensor& logits);

/// Symmetric-normalized Laplacian of g, scaled by the configured lambda_max
/// policy.
std::shared_ptr<const SparseLaplacian> build_scaled_laplacian(const CsrGraph& g,
                                                              const ModelConfig& cfg);

}  // namespace chebmixer
