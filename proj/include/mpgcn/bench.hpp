#pragma once

#include <array>
#include <string>
#include <vector>

#include "mpgcn/config.hpp"

namespace mpgcn {

struct BenchRow {
    std::string model;
    int64_t params = 0;
    double mean_test_acc = 0.0;
    double std_test_acc = 0.0;
    double mean_epochs_to_95 = 0.0;
};

struct ModelRuns {
    std::string model;
    RepeatResult result;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::vector<ModelRuns> runs;
};

/// Runs one model configuration end to end.
BenchResult run_single(const ExperimentConfig& cfg);
BenchResult run_single(const ExperimentConfig& cfg, const Dataset& ds);

/// Runs gcn, resgcn and mpgcn on one dataset. The three configs must agree
/// on the dataset section, hidden width, epoch budget and seed list;
/// mismatches are an error raised before any training starts.
BenchResult run_bench(const std::array<ExperimentConfig, 3>& cfgs);

/// `model,seed,epoch,train_loss,train_acc,val_acc,test_acc` rows for every
/// model, seed and epoch, shortest round-trip float formatting.
std::string metrics_csv(const std::vector<ModelRuns>& runs);

/// `model,params,mean_test_acc,std_test_acc,mean_epochs_to_95` rows.
std::string summary_csv(const std::vector<BenchRow>& rows);

/// Recomputes summary rows from parsed metrics-CSV text; used to confirm
/// the emitted summary carries no hidden state.
std::vector<BenchRow> summarize_metrics_csv(const std::string& csv_text,
                                            const std::vector<BenchRow>& params_source);

void write_file(const std::string& path, const std::string& text);

/// Writes metrics, summary and the resolved-config echo
/// (`<summary>.config.json`). The echo document carries every model's
/// resolved config keyed by model name.
void write_outputs(const OutputConfig& out, const BenchResult& result,
                   const std::vector<std::pair<std::string, ExperimentConfig>>& configs);

} // namespace mpgcn
