#include "mpgcn/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mpgcn {

using nlohmann::json;

namespace {

enum class LeafType { Str, I64, U64, F64, Bool, U64List, I64List };

struct LeafDef {
    const char* key;
    LeafType type;
};

const LeafDef kLeafDefs[] = {
    {"dataset.kind", LeafType::Str},
    {"dataset.content", LeafType::Str},
    {"dataset.cites", LeafType::Str},
    {"dataset.cache", LeafType::Str},
    {"dataset.sbm.blocks", LeafType::I64},
    {"dataset.sbm.per_block", LeafType::I64},
    {"dataset.sbm.p_intra", LeafType::F64},
    {"dataset.sbm.p_inter", LeafType::F64},
    {"dataset.sbm.dim", LeafType::I64},
    {"dataset.sbm.seed", LeafType::U64},
    {"dataset.train_per_class", LeafType::I64},
    {"dataset.val_per_class", LeafType::I64},
    {"dataset.row_normalize", LeafType::Bool},
    {"model.arch", LeafType::Str},
    {"model.hidden", LeafType::I64},
    {"model.depth", LeafType::I64},
    {"model.paths", LeafType::I64List},
    {"model.shared_stem", LeafType::I64},
    {"model.dropout", LeafType::F64},
    {"model.bias", LeafType::Bool},
    {"train.lr", LeafType::F64},
    {"train.weight_decay", LeafType::F64},
    {"train.epochs", LeafType::I64},
    {"train.seeds", LeafType::U64List},
    {"train.seed_count", LeafType::I64},
    {"train.adam_beta1", LeafType::F64},
    {"train.adam_beta2", LeafType::F64},
    {"train.adam_eps", LeafType::F64},
    {"output.metrics", LeafType::Str},
    {"output.summary", LeafType::Str},
};

const LeafDef* find_leaf(const std::string& key) {
    for (const auto& def : kLeafDefs)
        if (key == def.key) return &def;
    return nullptr;
}

void collect_leaves(const json& node, const std::string& prefix, std::vector<std::string>& out) {
    if (!node.is_object()) {
        out.push_back(prefix);
        return;
    }
    for (const auto& [k, v] : node.items())
        collect_leaves(v, prefix.empty() ? k : prefix + "." + k, out);
}

std::vector<std::string> split_dotted(const std::string& key) {
    std::vector<std::string> parts;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    return parts;
}

const json* find_path(const json& doc, const std::string& key) {
    const json* node = &doc;
    for (const auto& part : split_dotted(key)) {
        if (!node->is_object() || !node->contains(part)) return nullptr;
        node = &(*node)[part];
    }
    return node;
}

void set_path(json& doc, const std::string& key, json value) {
    json* node = &doc;
    auto parts = split_dotted(key);
    for (size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = std::move(value);
}

[[noreturn]] void type_error(const std::string& key, const char* expected) {
    throw std::runtime_error("config key '" + key + "': expected " + expected);
}

json parse_flag_value(const LeafDef& def, const std::string& text) {
    auto parse_u64 = [&](const std::string& s) {
        size_t used = 0;
        uint64_t v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    };
    auto parse_i64 = [&](const std::string& s) {
        size_t used = 0;
        int64_t v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    };
    try {
        switch (def.type) {
        case LeafType::Str: return text;
        case LeafType::I64: return parse_i64(text);
        case LeafType::U64: return parse_u64(text);
        case LeafType::F64: {
            size_t used = 0;
            double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        }
        case LeafType::Bool: {
            if (text == "true" || text == "1") return true;
            if (text == "false" || text == "0") return false;
            throw std::invalid_argument(text);
        }
        case LeafType::I64List:
        case LeafType::U64List: {
            json arr = json::array();
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty())
                    arr.push_back(def.type == LeafType::I64List ? json(parse_i64(item)) : json(parse_u64(item)));
            return arr;
        }
        }
    } catch (const std::exception&) {
        throw std::runtime_error("flag --" + std::string(def.key) + ": cannot parse value '" + text + "'");
    }
    throw std::runtime_error("flag --" + std::string(def.key) + ": unhandled type");
}

bool has(const json& doc, const std::string& key) { return find_path(doc, key) != nullptr; }

std::string get_str(const json& doc, const std::string& key, std::string fallback) {
    const json* v = find_path(doc, key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) type_error(key, "a string");
    return v->get<std::string>();
}

int64_t get_i64(const json& doc, const std::string& key, int64_t fallback) {
    const json* v = find_path(doc, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) type_error(key, "an integer");
    return v->get<int64_t>();
}

uint64_t get_u64(const json& doc, const std::string& key, uint64_t fallback) {
    const json* v = find_path(doc, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) type_error(key, "a non-negative integer");
    if (!v->is_number_unsigned() && v->get<int64_t>() < 0) type_error(key, "a non-negative integer");
    return v->get<uint64_t>();
}

double get_f64(const json& doc, const std::string& key, double fallback) {
    const json* v = find_path(doc, key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) type_error(key, "a number");
    return v->get<double>();
}

bool get_bool(const json& doc, const std::string& key, bool fallback) {
    const json* v = find_path(doc, key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) type_error(key, "a boolean");
    return v->get<bool>();
}

template <typename T>
std::vector<T> get_list(const json& doc, const std::string& key) {
    const json* v = find_path(doc, key);
    std::vector<T> out;
    if (v == nullptr) return out;
    if (!v->is_array()) type_error(key, "an array");
    for (const auto& item : *v) {
        if (!item.is_number_integer()) type_error(key, "an array of integers");
        if (std::is_unsigned_v<T> && !item.is_number_unsigned() && item.get<int64_t>() < 0)
            type_error(key, "an array of non-negative integers");
        out.push_back(item.get<T>());
    }
    return out;
}

void reject_keys(const json& doc, const std::vector<std::string>& keys, const std::string& why) {
    std::vector<std::string> present;
    for (const auto& key : keys)
        if (has(doc, key)) present.push_back(key);
    if (present.empty()) return;
    std::string list;
    for (size_t i = 0; i < present.size(); ++i) list += (i ? ", " : "") + present[i];
    throw std::runtime_error("contradictory config: " + list + " not allowed " + why);
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& def : kLeafDefs) out.emplace_back(def.key);
        return out;
    }();
    return keys;
}

ExperimentConfig resolve_config(const json& doc_in, const FlagOverrides& overrides) {
    if (!doc_in.is_object()) throw std::runtime_error("config root must be a JSON object");

    std::vector<std::string> leaves;
    collect_leaves(doc_in, "", leaves);
    std::vector<std::string> unknown;
    for (const auto& leaf : leaves)
        if (find_leaf(leaf) == nullptr) unknown.push_back(leaf);
    if (!unknown.empty()) {
        std::sort(unknown.begin(), unknown.end());
        std::string list;
        for (size_t i = 0; i < unknown.size(); ++i) list += (i ? ", " : "") + unknown[i];
        throw std::runtime_error("unknown config keys: " + list);
    }

    json doc = doc_in;
    for (const auto& [key, text] : overrides) {
        const LeafDef* def = find_leaf(key);
        if (def == nullptr) throw std::runtime_error("unknown config key: " + key);
        set_path(doc, key, parse_flag_value(*def, text));
    }

    ExperimentConfig cfg;

    // dataset section; exactly one source
    cfg.dataset.kind = get_str(doc, "dataset.kind", cfg.dataset.kind);
    if (cfg.dataset.kind == "sbm") {
        reject_keys(doc, {"dataset.content", "dataset.cites", "dataset.cache"},
                    "with dataset.kind=sbm");
        cfg.dataset.sbm_blocks = get_i64(doc, "dataset.sbm.blocks", cfg.dataset.sbm_blocks);
        cfg.dataset.sbm_per_block = get_i64(doc, "dataset.sbm.per_block", cfg.dataset.sbm_per_block);
        cfg.dataset.sbm_p_intra = get_f64(doc, "dataset.sbm.p_intra", cfg.dataset.sbm_p_intra);
        cfg.dataset.sbm_p_inter = get_f64(doc, "dataset.sbm.p_inter", cfg.dataset.sbm_p_inter);
        cfg.dataset.sbm_dim = get_i64(doc, "dataset.sbm.dim", cfg.dataset.sbm_dim);
        cfg.dataset.sbm_seed = get_u64(doc, "dataset.sbm.seed", cfg.dataset.sbm_seed);
    } else if (cfg.dataset.kind == "linqs") {
        reject_keys(doc,
                    {"dataset.cache", "dataset.sbm.blocks", "dataset.sbm.per_block",
                     "dataset.sbm.p_intra", "dataset.sbm.p_inter", "dataset.sbm.dim",
                     "dataset.sbm.seed"},
                    "with dataset.kind=linqs");
        cfg.dataset.content = get_str(doc, "dataset.content", "");
        cfg.dataset.cites = get_str(doc, "dataset.cites", "");
        if (cfg.dataset.content.empty() || cfg.dataset.cites.empty())
            throw std::runtime_error("dataset.kind=linqs requires dataset.content and dataset.cites");
    } else if (cfg.dataset.kind == "cache") {
        reject_keys(doc,
                    {"dataset.content", "dataset.cites", "dataset.sbm.blocks",
                     "dataset.sbm.per_block", "dataset.sbm.p_intra", "dataset.sbm.p_inter",
                     "dataset.sbm.dim", "dataset.sbm.seed"},
                    "with dataset.kind=cache");
        cfg.dataset.cache = get_str(doc, "dataset.cache", "");
        if (cfg.dataset.cache.empty())
            throw std::runtime_error("dataset.kind=cache requires dataset.cache");
    } else {
        throw std::runtime_error("dataset.kind must be one of sbm, linqs, cache (got '" +
                                 cfg.dataset.kind + "')");
    }
    cfg.dataset.train_per_class = get_i64(doc, "dataset.train_per_class", cfg.dataset.train_per_class);
    cfg.dataset.val_per_class = get_i64(doc, "dataset.val_per_class", cfg.dataset.val_per_class);
    cfg.dataset.row_normalize = get_bool(doc, "dataset.row_normalize", cfg.dataset.row_normalize);

    // model section; arch-specific fields must match the arch
    cfg.model.arch = get_str(doc, "model.arch", cfg.model.arch);
    if (cfg.model.arch == "gcn" || cfg.model.arch == "resgcn") {
        reject_keys(doc, {"model.paths", "model.shared_stem"}, "with model.arch=" + cfg.model.arch);
        cfg.model.depth = get_i64(doc, "model.depth", cfg.model.depth);
        cfg.model.paths.clear();
        cfg.model.shared_stem = 0;
    } else if (cfg.model.arch == "mpgcn") {
        reject_keys(doc, {"model.depth"}, "with model.arch=mpgcn");
        cfg.model.paths = get_list<int64_t>(doc, "model.paths");
        if (cfg.model.paths.empty())
            throw std::runtime_error("model.arch=mpgcn requires a non-empty model.paths");
        cfg.model.shared_stem = get_i64(doc, "model.shared_stem", 0);
        cfg.model.depth = 0;
    } else {
        throw std::runtime_error("model.arch must be one of gcn, resgcn, mpgcn (got '" +
                                 cfg.model.arch + "')");
    }
    cfg.model.hidden = get_i64(doc, "model.hidden", cfg.model.hidden);
    cfg.model.dropout = get_f64(doc, "model.dropout", cfg.model.dropout);
    cfg.model.bias = get_bool(doc, "model.bias", cfg.model.bias);

    // train section
    cfg.train.lr = get_f64(doc, "train.lr", cfg.train.lr);
    cfg.train.weight_decay = get_f64(doc, "train.weight_decay", cfg.train.weight_decay);
    cfg.train.epochs = get_i64(doc, "train.epochs", cfg.train.epochs);
    if (has(doc, "train.seeds") && has(doc, "train.seed_count"))
        throw std::runtime_error("contradictory config: give train.seeds or train.seed_count, not both");
    if (has(doc, "train.seeds")) {
        cfg.train.seeds = get_list<uint64_t>(doc, "train.seeds");
        if (cfg.train.seeds.empty()) throw std::runtime_error("train.seeds must be non-empty");
    } else {
        const int64_t count = get_i64(doc, "train.seed_count", 10);
        if (count < 1) throw std::runtime_error("train.seed_count must be >= 1");
        cfg.train.seeds.clear();
        for (int64_t s = 1; s <= count; ++s) cfg.train.seeds.push_back(static_cast<uint64_t>(s));
    }
    cfg.train.adam_beta1 = get_f64(doc, "train.adam_beta1", cfg.train.adam_beta1);
    cfg.train.adam_beta2 = get_f64(doc, "train.adam_beta2", cfg.train.adam_beta2);
    cfg.train.adam_eps = get_f64(doc, "train.adam_eps", cfg.train.adam_eps);

    if (cfg.train.lr <= 0.0) throw std::runtime_error("train.lr must be > 0");
    if (cfg.train.epochs < 0) throw std::runtime_error("train.epochs must be >= 0");
    if (cfg.train.weight_decay < 0.0) throw std::runtime_error("train.weight_decay must be >= 0");

    // output section
    cfg.output.metrics = get_str(doc, "output.metrics", cfg.output.metrics);
    cfg.output.summary = get_str(doc, "output.summary", cfg.output.summary);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path, const FlagOverrides& overrides) {
    json doc = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file " + path);
        try {
            in >> doc;
        } catch (const json::parse_error& e) {
            throw std::runtime_error("config file " + path + ": " + e.what());
        }
    }
    return resolve_config(doc, overrides);
}

json config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["dataset"]["kind"] = cfg.dataset.kind;
    if (cfg.dataset.kind == "sbm") {
        doc["dataset"]["sbm"]["blocks"] = cfg.dataset.sbm_blocks;
        doc["dataset"]["sbm"]["per_block"] = cfg.dataset.sbm_per_block;
        doc["dataset"]["sbm"]["p_intra"] = cfg.dataset.sbm_p_intra;
        doc["dataset"]["sbm"]["p_inter"] = cfg.dataset.sbm_p_inter;
        doc["dataset"]["sbm"]["dim"] = cfg.dataset.sbm_dim;
        doc["dataset"]["sbm"]["seed"] = cfg.dataset.sbm_seed;
    } else if (cfg.dataset.kind == "linqs") {
        doc["dataset"]["content"] = cfg.dataset.content;
        doc["dataset"]["cites"] = cfg.dataset.cites;
    } else {
        doc["dataset"]["cache"] = cfg.dataset.cache;
    }
    doc["dataset"]["train_per_class"] = cfg.dataset.train_per_class;
    doc["dataset"]["val_per_class"] = cfg.dataset.val_per_class;
    doc["dataset"]["row_normalize"] = cfg.dataset.row_normalize;

    doc["model"]["arch"] = cfg.model.arch;
    doc["model"]["hidden"] = cfg.model.hidden;
    if (cfg.model.arch == "mpgcn") {
        doc["model"]["paths"] = cfg.model.paths;
        doc["model"]["shared_stem"] = cfg.model.shared_stem;
    } else {
        doc["model"]["depth"] = cfg.model.depth;
    }
    doc["model"]["dropout"] = cfg.model.dropout;
    doc["model"]["bias"] = cfg.model.bias;

    doc["train"]["lr"] = cfg.train.lr;
    doc["train"]["weight_decay"] = cfg.train.weight_decay;
    doc["train"]["epochs"] = cfg.train.epochs;
    doc["train"]["seeds"] = cfg.train.seeds;
    doc["train"]["adam_beta1"] = cfg.train.adam_beta1;
    doc["train"]["adam_beta2"] = cfg.train.adam_beta2;
    doc["train"]["adam_eps"] = cfg.train.adam_eps;

    doc["output"]["metrics"] = cfg.output.metrics;
    doc["output"]["summary"] = cfg.output.summary;
    return doc;
}

Dataset load_dataset(const DatasetConfig& cfg) {
    Dataset ds;
    if (cfg.kind == "sbm") {
        ds = generate_sbm(cfg.sbm_blocks, cfg.sbm_per_block, cfg.sbm_p_intra, cfg.sbm_p_inter,
                          cfg.sbm_dim, cfg.sbm_seed);
    } else if (cfg.kind == "linqs") {
        ds = load_linqs(cfg.content, cfg.cites);
    } else if (cfg.kind == "cache") {
        ds = load_cache(cfg.cache);
    } else {
        throw std::runtime_error("unknown dataset kind '" + cfg.kind + "'");
    }
    if (cfg.row_normalize) row_normalize_features(ds);
    return ds;
}

ModelSpec make_model_spec(const ModelConfig& cfg, int64_t in_dim, int64_t classes) {
    ModelSpec spec;
    if (cfg.arch == "gcn")
        spec.kind = ArchKind::Sequential;
    else if (cfg.arch == "resgcn")
        spec.kind = ArchKind::Residual;
    else if (cfg.arch == "mpgcn")
        spec.kind = ArchKind::Multipath;
    else
        throw std::runtime_error("unknown model arch '" + cfg.arch + "'");
    spec.in_dim = in_dim;
    spec.hidden = cfg.hidden;
    spec.classes = classes;
    spec.depth = cfg.depth;
    spec.paths = cfg.paths;
    spec.shared_stem = cfg.shared_stem;
    spec.dropout = cfg.dropout;
    spec.bias = cfg.bias;
    validate_spec(spec);
    return spec;
}

TrainConfig make_train_config(const ExperimentConfig& cfg) {
    TrainConfig tc;
    tc.lr = cfg.train.lr;
    tc.weight_decay = cfg.train.weight_decay;
    tc.epochs = cfg.train.epochs;
    tc.dropout = cfg.model.dropout;
    tc.hidden = cfg.model.hidden;
    tc.seeds = cfg.train.seeds;
    tc.adam_beta1 = cfg.train.adam_beta1;
    tc.adam_beta2 = cfg.train.adam_beta2;
    tc.adam_eps = cfg.train.adam_eps;
    return tc;
}

} // namespace mpgcn
