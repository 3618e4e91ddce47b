#include <cinttypes>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mpgcn/bench.hpp"
#include "mpgcn/config.hpp"
#include "mpgcn/csv.hpp"
#include "mpgcn/gradcheck.hpp"

namespace {

struct FlagBinding {
    std::map<std::string, std::string> values;

    void attach(CLI::App* cmd) {
        for (const auto& key : mpgcn::config_keys())
            cmd->add_option_function<std::string>(
                "--" + key, [this, key](const std::string& v) { values[key] = v; },
                "override config key " + key);
    }
};

void print_summary(const std::vector<mpgcn::BenchRow>& rows) {
    std::printf("%-8s %10s %14s %13s %16s\n", "model", "params", "mean_test_acc", "std_test_acc",
                "mean_epochs_95");
    for (const auto& row : rows)
        std::printf("%-8s %10" PRId64 " %14.4f %13.4f %16.1f\n", row.model.c_str(), row.params,
                    row.mean_test_acc, row.std_test_acc, row.mean_epochs_to_95);
}

void warn_skipped(const mpgcn::Dataset& ds) {
    if (ds.skipped_citations > 0)
        std::cerr << "warning: skipped " << ds.skipped_citations
                  << " citation line(s) referencing ids absent from the .content file\n";
}

int cmd_train(const std::string& config_path, const FlagBinding& flags) {
    mpgcn::ExperimentConfig cfg = mpgcn::parse_config(config_path, flags.values);
    mpgcn::Dataset ds = mpgcn::load_dataset(cfg.dataset);
    warn_skipped(ds);

    mpgcn::BenchResult result = mpgcn::run_single(cfg, ds);
    mpgcn::write_outputs(cfg.output, result, {{cfg.model.arch, cfg}});
    print_summary(result.rows);
    std::printf("metrics: %s\nsummary: %s\n", cfg.output.metrics.c_str(), cfg.output.summary.c_str());
    return 0;
}

int cmd_bench(const std::string& gcn_path, const std::string& resgcn_path,
              const std::string& mpgcn_path, const FlagBinding& flags) {
    std::array<mpgcn::ExperimentConfig, 3> cfgs = {
        mpgcn::parse_config(gcn_path, flags.values),
        mpgcn::parse_config(resgcn_path, flags.values),
        mpgcn::parse_config(mpgcn_path, flags.values),
    };
    mpgcn::BenchResult result = mpgcn::run_bench(cfgs);
    mpgcn::write_outputs(cfgs[0].output, result,
                         {{"gcn", cfgs[0]}, {"resgcn", cfgs[1]}, {"mpgcn", cfgs[2]}});
    print_summary(result.rows);
    std::printf("metrics: %s\nsummary: %s\n", cfgs[0].output.metrics.c_str(),
                cfgs[0].output.summary.c_str());
    return 0;
}

int cmd_synth(int64_t blocks, int64_t per_block, double p_intra, double p_inter, int64_t dim,
              uint64_t seed, const std::string& out_path) {
    mpgcn::Dataset ds = mpgcn::generate_sbm(blocks, per_block, p_intra, p_inter, dim, seed);
    mpgcn::save_cache(ds, out_path);
    std::printf("wrote %s: %" PRId64 " nodes, %zu directed edges, %" PRId64 " classes, dim %" PRId64 "\n",
                out_path.c_str(), ds.num_nodes(), ds.graph.edges.size(), ds.num_classes,
                ds.features.cols);
    return 0;
}

int cmd_gradcheck(uint64_t seed) {
    auto cases = mpgcn::run_gradcheck_suite(seed);
    bool all_pass = true;
    double worst = 0.0;
    for (const auto& c : cases) {
        std::printf("%-28s max_rel_err=%-12s tolerance=%-8s %s\n", c.name.c_str(),
                    mpgcn::format_double(c.max_rel_err).c_str(),
                    mpgcn::format_double(c.tolerance).c_str(), c.pass ? "ok" : "FAIL");
        all_pass = all_pass && c.pass;
        worst = std::max(worst, c.max_rel_err);
    }
    std::printf("%s (worst max_rel_err %s over %zu cases)\n", all_pass ? "all ok" : "FAILURES",
                mpgcn::format_double(worst).c_str(), cases.size());
    return all_pass ? 0 : 1;
}

int cmd_count(const std::string& arch, int64_t in_dim, int64_t hidden, int64_t classes,
              int64_t depth, const std::vector<int64_t>& paths, int64_t shared_stem, bool bias) {
    mpgcn::ModelConfig mc;
    mc.arch = arch;
    mc.hidden = hidden;
    mc.depth = depth;
    mc.paths = paths;
    mc.shared_stem = shared_stem;
    mc.bias = bias;
    mc.dropout = 0.0;
    mpgcn::ModelSpec spec = mpgcn::make_model_spec(mc, in_dim, classes);
    mpgcn::ParamCount count = mpgcn::param_count(spec);
    std::printf("conv: %" PRId64 "\nfinal_linear: %" PRId64 "\ntotal: %" PRId64 "\n", count.conv,
                count.final_linear, count.total);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph convolution laboratory: sequential, residual and multipath models"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train one model over the configured seed list");
    std::string train_config;
    train->add_option("--config", train_config, "JSON experiment config");
    FlagBinding train_flags;
    train_flags.attach(train);

    // bench
    auto* bench = app.add_subcommand("bench", "compare gcn, resgcn and mpgcn on one dataset");
    std::string gcn_cfg, resgcn_cfg, mpgcn_cfg;
    bench->add_option("--gcn", gcn_cfg, "config for the sequential model")->required();
    bench->add_option("--resgcn", resgcn_cfg, "config for the residual model")->required();
    bench->add_option("--mpgcn", mpgcn_cfg, "config for the multipath model")->required();
    FlagBinding bench_flags;
    bench_flags.attach(bench);

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic block-model dataset cache");
    int64_t blocks = 4, per_block = 60, dim = 16;
    double p_intra = 0.1, p_inter = 0.02;
    uint64_t synth_seed = 1;
    std::string synth_out = "sbm.bin";
    synth->add_option("--blocks", blocks, "community count");
    synth->add_option("--per-block", per_block, "nodes per community");
    synth->add_option("--p-intra", p_intra, "intra-community edge probability");
    synth->add_option("--p-inter", p_inter, "inter-community edge probability");
    synth->add_option("--dim", dim, "feature dimension (>= blocks)");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output cache path");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference verification suite");
    uint64_t gc_seed = 1;
    gradcheck->add_option("--seed", gc_seed, "suite seed");

    // count
    auto* count = app.add_subcommand("count", "print exact trainable parameter counts");
    std::string arch = "gcn";
    int64_t in_dim = 0, hidden = 64, classes = 0, depth = 3, shared_stem = 0;
    std::vector<int64_t> paths;
    bool no_bias = false;
    count->add_option("--arch", arch, "gcn | resgcn | mpgcn")->required();
    count->add_option("--in-dim", in_dim, "input feature dimension")->required();
    count->add_option("--hidden", hidden, "hidden width");
    count->add_option("--classes", classes, "class count")->required();
    count->add_option("--depth", depth, "layer count (gcn/resgcn)");
    count->add_option("--paths", paths, "path depths (mpgcn)")->delimiter(',');
    count->add_option("--shared-stem", shared_stem, "layers shared by all paths (mpgcn)");
    count->add_flag("--no-bias", no_bias, "count without bias terms");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_config, train_flags);
        if (bench->parsed()) return cmd_bench(gcn_cfg, resgcn_cfg, mpgcn_cfg, bench_flags);
        if (synth->parsed()) return cmd_synth(blocks, per_block, p_intra, p_inter, dim, synth_seed, synth_out);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seed);
        if (count->parsed()) return cmd_count(arch, in_dim, hidden, classes, depth, paths, shared_stem, !no_bias);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
