#include "mpgcn/bench.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mpgcn/csv.hpp"

namespace mpgcn {

namespace {

BenchRow make_row(const std::string& model, const ModelSpec& spec, const RepeatResult& result) {
    BenchRow row;
    row.model = model;
    row.params = param_count(spec).total;
    row.mean_test_acc = result.mean_test_acc;
    row.std_test_acc = result.std_test_acc;
    row.mean_epochs_to_95 = result.mean_epochs_to_95;
    return row;
}

RepeatResult run_model(const ExperimentConfig& cfg, const Dataset& ds, ModelSpec* spec_out) {
    ModelSpec spec = make_model_spec(cfg.model, ds.features.cols, ds.num_classes);
    TrainConfig tc = make_train_config(cfg);
    SplitSpec split{cfg.dataset.train_per_class, cfg.dataset.val_per_class};
    RepeatResult result = repeat_runs(spec, ds, tc, split);
    if (spec_out != nullptr) *spec_out = spec;
    return result;
}

} // namespace

BenchResult run_single(const ExperimentConfig& cfg) {
    Dataset ds = load_dataset(cfg.dataset);
    return run_single(cfg, ds);
}

BenchResult run_single(const ExperimentConfig& cfg, const Dataset& ds) {
    ModelSpec spec;
    RepeatResult result = run_model(cfg, ds, &spec);
    BenchResult bench;
    bench.rows.push_back(make_row(cfg.model.arch, spec, result));
    bench.runs.push_back({cfg.model.arch, std::move(result)});
    return bench;
}

BenchResult run_bench(const std::array<ExperimentConfig, 3>& cfgs) {
    const char* expected_arch[3] = {"gcn", "resgcn", "mpgcn"};
    for (size_t i = 0; i < 3; ++i)
        if (cfgs[i].model.arch != expected_arch[i])
            throw std::invalid_argument("bench: config " + std::to_string(i) + " must have model.arch=" +
                                        expected_arch[i] + ", got '" + cfgs[i].model.arch + "'");
    for (size_t i = 1; i < 3; ++i) {
        if (!(cfgs[i].dataset == cfgs[0].dataset))
            throw std::invalid_argument("bench: dataset sections differ between models");
        if (cfgs[i].model.hidden != cfgs[0].model.hidden)
            throw std::invalid_argument("bench: hidden width differs between models");
        if (cfgs[i].train.epochs != cfgs[0].train.epochs)
            throw std::invalid_argument("bench: epoch budget differs between models");
        if (cfgs[i].train.seeds != cfgs[0].train.seeds)
            throw std::invalid_argument("bench: seed lists differ between models");
    }

    Dataset ds = load_dataset(cfgs[0].dataset);
    BenchResult bench;
    for (const auto& cfg : cfgs) {
        ModelSpec spec;
        RepeatResult result = run_model(cfg, ds, &spec);
        bench.rows.push_back(make_row(cfg.model.arch, spec, result));
        bench.runs.push_back({cfg.model.arch, std::move(result)});
    }
    return bench;
}

std::string metrics_csv(const std::vector<ModelRuns>& runs) {
    std::string out = "model,seed,epoch,train_loss,train_acc,val_acc,test_acc\n";
    for (const auto& model : runs) {
        for (const auto& run : model.result.runs) {
            for (const auto& rec : run.records) {
                out += model.model;
                out += ',';
                out += std::to_string(run.seed);
                out += ',';
                out += std::to_string(rec.epoch);
                out += ',';
                out += format_double(rec.train_loss);
                out += ',';
                out += format_double(rec.train_acc);
                out += ',';
                out += format_double(rec.val_acc);
                out += ',';
                out += format_double(rec.test_acc);
                out += '\n';
            }
        }
    }
    return out;
}

std::string summary_csv(const std::vector<BenchRow>& rows) {
    std::string out = "model,params,mean_test_acc,std_test_acc,mean_epochs_to_95\n";
    for (const auto& row : rows) {
        out += row.model;
        out += ',';
        out += std::to_string(row.params);
        out += ',';
        out += format_double(row.mean_test_acc);
        out += ',';
        out += format_double(row.std_test_acc);
        out += ',';
        out += format_double(row.mean_epochs_to_95);
        out += '\n';
    }
    return out;
}

std::vector<BenchRow> summarize_metrics_csv(const std::string& csv_text,
                                            const std::vector<BenchRow>& params_source) {
    struct SeedTrace {
        double final_test = 0.0;
        double best_val = 0.0;
        int64_t epochs95 = 0;
        std::vector<std::pair<int64_t, double>> val_by_epoch;
    };
    std::map<std::string, std::map<uint64_t, SeedTrace>> by_model;
    std::vector<std::string> model_order;

    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line) || line != "model,seed,epoch,train_loss,train_acc,val_acc,test_acc")
        throw std::runtime_error("metrics csv: unexpected header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string model, field;
        std::getline(row, model, ',');
        std::getline(row, field, ',');
        const uint64_t seed = std::stoull(field);
        std::getline(row, field, ',');
        const int64_t epoch = std::stoll(field);
        std::getline(row, field, ','); // train_loss
        std::getline(row, field, ','); // train_acc
        std::getline(row, field, ',');
        const double val_acc = std::stod(field);
        std::getline(row, field, ',');
        const double test_acc = std::stod(field);

        if (by_model.find(model) == by_model.end()) model_order.push_back(model);
        SeedTrace& trace = by_model[model][seed];
        trace.final_test = test_acc;
        trace.val_by_epoch.emplace_back(epoch, val_acc);
    }

    std::vector<BenchRow> rows;
    for (const auto& model : model_order) {
        auto& seeds = by_model[model];
        double mean = 0.0;
        double mean_epochs = 0.0;
        for (auto& [seed, trace] : seeds) {
            for (const auto& [epoch, val] : trace.val_by_epoch)
                trace.best_val = std::max(trace.best_val, val);
            for (const auto& [epoch, val] : trace.val_by_epoch) {
                if (val >= 0.95 * trace.best_val) {
                    trace.epochs95 = epoch;
                    break;
                }
            }
            mean += trace.final_test;
            mean_epochs += static_cast<double>(trace.epochs95);
        }
        const double n = static_cast<double>(seeds.size());
        mean /= n;
        mean_epochs /= n;
        double var = 0.0;
        if (seeds.size() > 1) {
            for (const auto& [seed, trace] : seeds) var += (trace.final_test - mean) * (trace.final_test - mean);
            var /= (n - 1.0);
        }

        BenchRow row;
        row.model = model;
        for (const auto& src : params_source)
            if (src.model == model) row.params = src.params;
        row.mean_test_acc = mean;
        row.std_test_acc = std::sqrt(var);
        row.mean_epochs_to_95 = mean_epochs;
        rows.push_back(row);
    }
    return rows;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("failed writing " + path);
}

void write_outputs(const OutputConfig& out, const BenchResult& result,
                   const std::vector<std::pair<std::string, ExperimentConfig>>& configs) {
    write_file(out.metrics, metrics_csv(result.runs));
    write_file(out.summary, summary_csv(result.rows));

    nlohmann::json echo;
    for (const auto& [name, cfg] : configs) echo[name] = config_to_json(cfg);
    write_file(out.summary + ".config.json", echo.dump(2) + "\n");
}

} // namespace mpgcn
