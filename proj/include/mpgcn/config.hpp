#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpgcn/dataset.hpp"
#include "mpgcn/model.hpp"
#include "mpgcn/train.hpp"

namespace mpgcn {

struct DatasetConfig {
    std::string kind = "sbm"; // sbm | linqs | cache
    std::string content;      // linqs
    std::string cites;        // linqs
    std::string cache;        // cache
    int64_t sbm_blocks = 4;
    int64_t sbm_per_block = 60;
    double sbm_p_intra = 0.1;
    double sbm_p_inter = 0.02;
    int64_t sbm_dim = 16;
    uint64_t sbm_seed = 1;
    int64_t train_per_class = 20;
    int64_t val_per_class = 30;
    bool row_normalize = false;

    bool operator==(const DatasetConfig&) const = default;
};

struct ModelConfig {
    std::string arch = "gcn"; // gcn | resgcn | mpgcn
    int64_t hidden = 64;
    int64_t depth = 3;               // gcn / resgcn
    std::vector<int64_t> paths;      // mpgcn
    int64_t shared_stem = 0;         // mpgcn
    double dropout = 0.5;
    bool bias = true;

    bool operator==(const ModelConfig&) const = default;
};

struct TrainSection {
    double lr = 0.01;
    double weight_decay = 5e-4;
    int64_t epochs = 100;
    std::vector<uint64_t> seeds; // resolved; defaults to 1..10
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    bool operator==(const TrainSection&) const = default;
};

struct OutputConfig {
    std::string metrics = "metrics.csv";
    std::string summary = "summary.csv";

    bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    ModelConfig model;
    TrainSection train;
    OutputConfig output;
};

/// Dotted leaf key -> string value, as collected from CLI flags. List
/// values are comma separated.
using FlagOverrides = std::map<std::string, std::string>;

/// All recognized dotted keys, for flag registration and validation.
const std::vector<std::string>& config_keys();

/// Resolves file config (optional) + flag overrides + defaults into a
/// fully-materialized config. Unknown keys are an error listing every
/// offender; arch-specific fields given for the wrong arch are an error.
ExperimentConfig parse_config(const std::string& path, const FlagOverrides& overrides);

/// Same resolution applied to an in-memory JSON document.
ExperimentConfig resolve_config(const nlohmann::json& doc, const FlagOverrides& overrides);

/// Fully-resolved echo; parsing it back yields the same config.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Materialize runtime objects from a config.
Dataset load_dataset(const DatasetConfig& cfg);
ModelSpec make_model_spec(const ModelConfig& cfg, int64_t in_dim, int64_t classes);
TrainConfig make_train_config(const ExperimentConfig& cfg);

} // namespace mpgcn
