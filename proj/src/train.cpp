#include "mpgcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "mpgcn/params_util.hpp"
#include "mpgcn/tape.hpp"

namespace mpgcn {

AdamState make_adam_state(const Parameters& params) {
    AdamState state;
    for (const Tensor* t : param_tensors(params)) {
        state.m.emplace_back(t->rows, t->cols);
        state.v.emplace_back(t->rows, t->cols);
    }
    return state;
}

void adam_step(Parameters& params, const Parameters& grads, AdamState& state, int64_t t,
               const TrainConfig& cfg) {
    if (t < 1) throw std::invalid_argument("adam_step: step index must be >= 1");

    std::vector<Tensor*> theta = param_tensors(params);
    std::vector<const Tensor*> g = param_tensors(grads);
    if (theta.size() != g.size() || theta.size() != state.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient/state layouts disagree");
    const ParamLayout layout = param_layout(params);

    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));

    for (size_t i = 0; i < theta.size(); ++i) {
        if (!theta[i]->same_shape(*g[i]))
            throw std::invalid_argument("adam_step: gradient shape mismatch for " + layout.names[i]);
        const bool decay = cfg.weight_decay > 0.0 && !layout.is_bias[i];
        for (size_t k = 0; k < theta[i]->data.size(); ++k) {
            double grad = g[i]->data[k];
            if (!std::isfinite(grad))
                throw std::runtime_error("adam_step: non-finite gradient in " + layout.names[i]);
            if (decay) grad += cfg.weight_decay * theta[i]->data[k];
            double& m = state.m[i].data[k];
            double& v = state.v[i].data[k];
            m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
            v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad * grad;
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            theta[i]->data[k] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

double evaluate(const Tensor& logits, const std::vector<int32_t>& labels,
                const std::vector<uint8_t>& mask) {
    if (static_cast<int64_t>(labels.size()) != logits.rows)
        throw std::invalid_argument("evaluate: label count does not match logits rows");
    int64_t total = 0;
    int64_t correct = 0;
    for (int64_t i = 0; i < logits.rows; ++i) {
        if (i >= static_cast<int64_t>(mask.size()) || !mask[static_cast<size_t>(i)]) continue;
        ++total;
        int32_t best = 0;
        for (int64_t j = 1; j < logits.cols; ++j)
            if (logits(i, j) > logits(i, best)) best = static_cast<int32_t>(j);
        if (best == labels[static_cast<size_t>(i)]) ++correct;
    }
    if (total == 0) throw std::invalid_argument("evaluate: empty mask");
    return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

void check_masks(const Dataset& ds) {
    if (!ds.has_masks() || mask_ids(ds.train_mask).empty() || mask_ids(ds.val_mask).empty() ||
        mask_ids(ds.test_mask).empty())
        throw std::invalid_argument("train_run: dataset needs non-empty train/val/test masks");
    for (size_t i = 0; i < ds.train_mask.size(); ++i) {
        const int count = (ds.train_mask[i] ? 1 : 0) + (ds.val_mask[i] ? 1 : 0) + (ds.test_mask[i] ? 1 : 0);
        if (count > 1)
            throw std::invalid_argument("train_run: masks overlap at node " + std::to_string(i));
    }
}

struct Evaluation {
    Tensor logits;
    double train_loss = 0.0;
};

Evaluation evaluate_forward(const ModelSpec& spec, const Parameters& params, const CsrMatrix& prop,
                            const Dataset& ds, const std::vector<int32_t>& train_ids) {
    Tape tape;
    ForwardResult fwd = forward_model(tape, spec, params, prop, ds.features, Mode::Evaluation, nullptr);
    NodeId loss = tape.masked_nll(fwd.logits, ds.labels, train_ids);
    return {tape.value(fwd.logits), tape.value(loss)(0, 0)};
}

EpochRecord make_record(int64_t epoch, const Evaluation& eval, const Dataset& ds) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = eval.train_loss;
    rec.train_acc = evaluate(eval.logits, ds.labels, ds.train_mask);
    rec.val_acc = evaluate(eval.logits, ds.labels, ds.val_mask);
    rec.test_acc = evaluate(eval.logits, ds.labels, ds.test_mask);
    return rec;
}

} // namespace

RunMetrics train_run(const ModelSpec& spec, const Dataset& ds, const TrainConfig& cfg,
                     uint64_t seed) {
    check_masks(ds);
    if (cfg.epochs < 0) throw std::invalid_argument("train_run: negative epoch count");

    const CsrMatrix prop = symmetric_normalize(add_self_loops(build_csr(ds.graph)));
    const std::vector<int32_t> train_ids = mask_ids(ds.train_mask);

    Parameters params = init_params(spec, seed);
    AdamState state = make_adam_state(params);
    Rng dropout_rng = substream(seed, "dropout");

    RunMetrics metrics;
    metrics.seed = seed;
    metrics.records.push_back(make_record(0, evaluate_forward(spec, params, prop, ds, train_ids), ds));

    for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        try {
            Tape tape;
            ForwardResult fwd =
                forward_model(tape, spec, params, prop, ds.features, Mode::Training, &dropout_rng);
            NodeId loss = tape.masked_nll(fwd.logits, ds.labels, train_ids);
            tape.backward(loss);

            Parameters grads = params;
            for (size_t i = 0; i < params.conv.size(); ++i) {
                grads.conv[i].weight = tape.grad(fwd.conv_weights[i]);
                if (grads.conv[i].bias) grads.conv[i].bias = tape.grad(fwd.conv_biases[i]);
            }
            grads.final_weight = tape.grad(fwd.final_weight);
            if (grads.final_bias) grads.final_bias = tape.grad(fwd.final_bias);

            adam_step(params, grads, state, epoch, cfg);
            metrics.records.push_back(
                make_record(epoch, evaluate_forward(spec, params, prop, ds, train_ids), ds));
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("epoch " + std::to_string(epoch) + ": " + e.what());
        }
    }

    metrics.final_test_acc = metrics.records.back().test_acc;

    double best_val = 0.0;
    for (const auto& rec : metrics.records) best_val = std::max(best_val, rec.val_acc);
    for (const auto& rec : metrics.records) {
        if (rec.val_acc >= 0.95 * best_val) {
            metrics.epochs_to_95pct_val = rec.epoch;
            break;
        }
    }
    for (const auto& rec : metrics.records) {
        if (rec.val_acc == best_val) {
            metrics.best_val_epoch_test_acc = rec.test_acc;
            break;
        }
    }
    return metrics;
}

RepeatResult repeat_runs(const ModelSpec& spec, const Dataset& ds, const TrainConfig& cfg,
                         const std::optional<SplitSpec>& split) {
    if (cfg.seeds.empty()) throw std::invalid_argument("repeat_runs: at least one seed required");
    if (!split && !ds.has_masks())
        throw std::invalid_argument("repeat_runs: dataset has no masks and no split policy was given");

    auto run_one = [&](uint64_t seed) {
        if (split) {
            Dataset ds_seed = make_splits(ds, split->train_per_class, split->val_per_class, seed);
            return train_run(spec, ds_seed, cfg, seed);
        }
        return train_run(spec, ds, cfg, seed);
    };

    RepeatResult result;
    result.runs.resize(cfg.seeds.size());
    std::vector<std::future<RunMetrics>> futures;
    futures.reserve(cfg.seeds.size());
    for (uint64_t seed : cfg.seeds)
        futures.push_back(std::async(std::launch::async, run_one, seed));
    for (size_t i = 0; i < futures.size(); ++i) result.runs[i] = futures[i].get();

    const double n = static_cast<double>(result.runs.size());
    double mean = 0.0;
    double mean_epochs = 0.0;
    for (const auto& run : result.runs) {
        mean += run.final_test_acc;
        mean_epochs += static_cast<double>(run.epochs_to_95pct_val);
    }
    mean /= n;
    mean_epochs /= n;

    double var = 0.0;
    if (result.runs.size() > 1) {
        for (const auto& run : result.runs) {
            const double dev = run.final_test_acc - mean;
            var += dev * dev;
        }
        var /= (n - 1.0);
    }

    result.mean_test_acc = mean;
    result.std_test_acc = std::sqrt(var);
    result.mean_epochs_to_95 = mean_epochs;
    return result;
}

} // namespace mpgcn
