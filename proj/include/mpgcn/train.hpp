#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mpgcn/dataset.hpp"
#include "mpgcn/model.hpp"

namespace mpgcn {

struct TrainConfig {
    double lr = 0.01;
    double weight_decay = 5e-4;
    int64_t epochs = 100;
    double dropout = 0.5;   // stamped onto the model spec by the CLI layer
    int64_t hidden = 64;    // likewise
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct EpochRecord {
    int64_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
};

struct RunMetrics {
    uint64_t seed = 0;
    std::vector<EpochRecord> records;      // epoch 0 (initial evaluation) onward
    double final_test_acc = 0.0;
    int64_t epochs_to_95pct_val = 0;       // first epoch reaching 95% of run-best val accuracy
    double best_val_epoch_test_acc = 0.0;  // test accuracy at the best-validation epoch
};

/// First and second Adam moments, aligned with param_tensors order.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

AdamState make_adam_state(const Parameters& params);

/// One Adam update with bias correction at step t >= 1. Weight decay is
/// added to the gradient as decay*theta before the moment update; bias
/// tensors are excluded from decay. Non-finite gradients abort with the
/// layer name.
void adam_step(Parameters& params, const Parameters& grads, AdamState& state, int64_t t,
               const TrainConfig& cfg);

/// Fraction of masked nodes whose row-argmax equals the label; argmax ties
/// break toward the lowest class id.
double evaluate(const Tensor& logits, const std::vector<int32_t>& labels,
                const std::vector<uint8_t>& mask);

/// Full-batch transductive training. Each epoch: one training-mode forward
/// on all nodes, masked NLL on the train mask, backward, Adam step, then an
/// evaluation-mode forward for the metrics record. Record 0 is the initial
/// evaluation before any update. Deterministic given (spec, ds, cfg, seed).
RunMetrics train_run(const ModelSpec& spec, const Dataset& ds, const TrainConfig& cfg,
                     uint64_t seed);

struct SplitSpec {
    int64_t train_per_class = 20;
    int64_t val_per_class = 30;
};

struct RepeatResult {
    std::vector<RunMetrics> runs; // seed order
    double mean_test_acc = 0.0;
    double std_test_acc = 0.0;    // sample standard deviation (n-1)
    double mean_epochs_to_95 = 0.0;
};

/// Runs every seed in cfg.seeds independently (in parallel when possible)
/// and aggregates final test accuracies in seed order. When `split` is
/// given, each seed samples its own masks; otherwise ds must carry masks.
RepeatResult repeat_runs(const ModelSpec& spec, const Dataset& ds, const TrainConfig& cfg,
                         const std::optional<SplitSpec>& split = std::nullopt);

} // namespace mpgcn
