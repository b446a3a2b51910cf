#pragma once

#include <cstdint>
#include <vector>

#include "chebmixer/dataset.hpp"
#include "chebmixer/model.hpp"

namespace chebmixer {

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t max_epochs = 2000;
    int64_t patience = 50;
    uint64_t seed = 0;
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
    ModelConfig model;

    void validate() const;
};

/// AdamW accumulators, one pair per parameter tensor in param_refs order.
struct OptimizerState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    int64_t t = 0;

    static OptimizerState init(const ModelParams& params);
};

struct EpochRecord {
    int64_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double epoch_seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> records;
    int64_t best_epoch = 0;
    double best_val_acc = 0.0;
};

/// Mean over masked rows of -log softmax(logits)[label], max-subtraction
/// stabilized.
double cross_entropy(const Tensor& logits, const std::vector<int64_t>& labels,
                     const std::vector<int64_t>& mask);

/// One decoupled-weight-decay Adam step. Decay applies only to tensors whose
/// ParamRef is decay-flagged. Throws on non-finite gradients, naming the
/// tensor.
void adamw_step(const std::vector<ParamRef>& params, const std::vector<Tensor>& grads,
                OptimizerState& state, const TrainConfig& cfg);

/// Seeded shuffle of [0, n); val and test take floor(frac * n) nodes each,
/// the remainder goes to train. Throws when any split would be empty.
std::vector<Split> make_splits(int64_t n, double train_frac, double val_frac, double test_frac,
                               uint64_t seed);

double accuracy(const std::vector<int64_t>& preds, const std::vector<int64_t>& labels,
                const std::vector<int64_t>& mask);

struct TrainResult {
    ModelParams best_params;
    TrainHistory history;
};

/// Full-batch training with early stopping on validation accuracy (strict
/// improvement; ties keep the earlier checkpoint). Returns the parameters of
/// the best epoch. Set record_timing to false to zero the per-epoch wall
/// times (reproducibility mode).
TrainResult train_loop(const Dataset& data, const TrainConfig& cfg, bool record_timing = true);

}  // namespace chebmixer
