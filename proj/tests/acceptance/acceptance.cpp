// Acceptance suite: runs every criterion at its stated tolerance and
// prints one line per criterion. Exit code is nonzero if any criterion
// fails; criteria that need user-supplied dataset files are skipped with a
// note when the files are absent.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mpgcn/bench.hpp"
#include "mpgcn/config.hpp"
#include "mpgcn/csv.hpp"
#include "mpgcn/gradcheck.hpp"
#include "support/dense_reference.hpp"

using namespace mpgcn;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const char* status, int criterion, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", status, criterion, detail.c_str());
    std::fflush(stdout);
    if (std::string(status) == "FAIL") ++g_failures;
}

void pass_fail(bool ok, int criterion, const std::string& detail) {
    report(ok ? "PASS" : "FAIL", criterion, detail);
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------- 1

void criterion_gradients() {
    const auto start = std::chrono::steady_clock::now();
    auto cases = run_gradcheck_suite(1);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    double worst_op = 0.0, worst_model = 0.0;
    bool all_pass = true;
    for (const auto& c : cases) {
        all_pass = all_pass && c.pass;
        if (c.name.rfind("op:", 0) == 0)
            worst_op = std::max(worst_op, c.max_rel_err);
        else
            worst_model = std::max(worst_model, c.max_rel_err);
        if (!c.pass)
            std::printf("       failing case %s: max_rel_err %s >= %s\n", c.name.c_str(),
                        fmt(c.max_rel_err).c_str(), fmt(c.tolerance).c_str());
    }
    const bool in_time = seconds < 30.0;
    pass_fail(all_pass && in_time, 1,
              "gradient correctness (worst per-op " + fmt(worst_op) + " < 1e-6, worst model " +
                  fmt(worst_model) + " < 1e-4, " + fmt(seconds) + " s < 30 s)");
}

// ---------------------------------------------------------------- 2

EdgeList random_graph(int64_t n, double p, Rng& rng) {
    EdgeList g{n, {}};
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = i + 1; j < n; ++j)
            if (rng.uniform01() < p) g.edges.emplace_back(i, j);
    return g;
}

void criterion_oracle() {
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int64_t n = 3 + static_cast<int64_t>(rng.below(14)); // 3..16 nodes
        EdgeList g = random_graph(n, 0.35, rng);
        CsrMatrix prop = symmetric_normalize(add_self_loops(build_csr(g)));
        const int64_t d = 2 + static_cast<int64_t>(rng.below(5));
        const int64_t h = 2 + static_cast<int64_t>(rng.below(7));
        const int64_t c = 2 + static_cast<int64_t>(rng.below(4));

        ModelSpec spec;
        spec.in_dim = d;
        spec.hidden = h;
        spec.classes = c;
        spec.dropout = 0.0;
        switch (trial % 3) {
        case 0:
            spec.kind = ArchKind::Sequential;
            spec.depth = 1 + static_cast<int64_t>(rng.below(3));
            break;
        case 1:
            spec.kind = ArchKind::Residual;
            spec.depth = 1 + static_cast<int64_t>(rng.below(3));
            break;
        default:
            spec.kind = ArchKind::Multipath;
            spec.paths = {1 + static_cast<int64_t>(rng.below(2)), 2, 3};
            spec.shared_stem = static_cast<int64_t>(rng.below(2));
            break;
        }

        Parameters params = init_params(spec, 7000 + static_cast<uint64_t>(trial));
        Tensor x(n, d);
        for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);

        Tape tape;
        Tensor logits = tape.value(forward_model(tape, spec, params, prop, x, Mode::Evaluation).logits);
        ref::Mat expect =
            ref::forward_dense(spec, params, ref::from_tensor(to_dense(prop)), ref::from_tensor(x));
        worst = std::max(worst, ref::max_abs_diff(ref::from_tensor(logits), expect));
    }
    pass_fail(worst <= 1e-10, 2,
              "oracle equivalence (100 random trials, worst abs gap " + fmt(worst) + " <= 1e-10)");
}

// ---------------------------------------------------------------- 3

void criterion_parity() {
    bool ok = true;
    std::string detail;

    ModelSpec seq6{ArchKind::Sequential, 128, 256, 40, 6, {}, 0, 0.0, true};
    ModelSpec mp64{ArchKind::Multipath, 128, 256, 40, 1, {3, 4}, 1, 0.0, true};
    const int64_t conv_seq = param_count(seq6).conv;
    const int64_t conv_mp = param_count(mp64).conv;
    ok = ok && conv_seq == 361984 && conv_mp == 361984;
    detail += "6-layer conv " + std::to_string(conv_seq) + " == " + std::to_string(conv_mp) +
              " == 361984";

    Rng rng(5);
    bool seven_ok = true;
    for (int trial = 0; trial < 25; ++trial) {
        const int64_t d = 1 + static_cast<int64_t>(rng.below(400));
        const int64_t h = 1 + static_cast<int64_t>(rng.below(400));
        const int64_t c = 1 + static_cast<int64_t>(rng.below(64));
        ModelSpec seq7{ArchKind::Sequential, d, h, c, 7, {}, 0, 0.0, true};
        ModelSpec mp53{ArchKind::Multipath, d, h, c, 1, {5, 3}, 1, 0.0, true};
        seven_ok = seven_ok && param_count(seq7).total == param_count(mp53).total;
    }
    ok = ok && seven_ok;
    detail += std::string("; 7-layer split parity for 25 random widths ") +
              (seven_ok ? "holds" : "BROKEN");

    ModelSpec seq3{ArchKind::Sequential, 8, 8, 3, 3, {}, 0, 0.0, true};
    ModelSpec mp12{ArchKind::Multipath, 8, 8, 3, 1, {1, 2}, 0, 0.0, true};
    const int64_t t_seq = param_count(seq3).total;
    const int64_t t_mp = param_count(mp12).total;
    ok = ok && t_seq == 243 && t_mp == 243;
    detail += "; small split totals " + std::to_string(t_seq) + " == " + std::to_string(t_mp) +
              " == 243";

    pass_fail(ok, 3, "parameter parity (" + detail + ")");
}

// ---------------------------------------------------------------- 4 & 5

struct LinqsFiles {
    std::string content, cites;
    bool found = false;
};

LinqsFiles find_linqs(const char* env_var, const std::string& fallback_dir, const std::string& stem) {
    LinqsFiles files;
    std::vector<std::string> dirs;
    if (const char* env = std::getenv(env_var)) dirs.push_back(env);
    dirs.push_back(fallback_dir);
    for (const auto& dir : dirs) {
        const fs::path content = fs::path(dir) / (stem + ".content");
        const fs::path cites = fs::path(dir) / (stem + ".cites");
        if (fs::exists(content) && fs::exists(cites)) {
            files.content = content.string();
            files.cites = cites.string();
            files.found = true;
            return files;
        }
    }
    return files;
}

std::array<ExperimentConfig, 3> protocol_configs(const LinqsFiles& files, const std::string& out_dir) {
    ExperimentConfig base;
    base.dataset.kind = "linqs";
    base.dataset.content = files.content;
    base.dataset.cites = files.cites;
    base.dataset.train_per_class = 20;
    base.dataset.val_per_class = 30;
    base.model.hidden = 64;
    base.train.epochs = 100;
    base.train.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    base.output.metrics = out_dir + "/metrics.csv";
    base.output.summary = out_dir + "/summary.csv";

    std::array<ExperimentConfig, 3> cfgs = {base, base, base};
    cfgs[0].model.arch = "gcn";
    cfgs[0].model.depth = 3;
    cfgs[1].model.arch = "resgcn";
    cfgs[1].model.depth = 3;
    cfgs[2].model.arch = "mpgcn";
    cfgs[2].model.paths = {1, 2};
    cfgs[2].model.shared_stem = 0;
    cfgs[2].model.depth = 0;
    return cfgs;
}

void criterion_cora(const fs::path& work_dir) {
    LinqsFiles files = find_linqs("MPGCN_CORA_DIR", "data/cora", "cora");
    if (!files.found) {
        report("SKIP", 4,
               "citation benchmark needs user-supplied files (looked for cora.content/cora.cites "
               "under $MPGCN_CORA_DIR and ./data/cora)");
        return;
    }
    const std::string out = (work_dir / "cora").string();
    fs::create_directories(out);
    BenchResult result = run_bench(protocol_configs(files, out));
    const double gcn = result.rows[0].mean_test_acc;
    const double mp = result.rows[2].mean_test_acc;
    const bool ok = gcn >= 0.75 && mp >= gcn - 0.005 && mp >= 0.77;
    pass_fail(ok, 4,
              "citation benchmark A (gcn mean " + fmt(gcn) + " >= 0.75; mpgcn mean " + fmt(mp) +
                  " >= gcn-0.005 and >= 0.77; resgcn mean " + fmt(result.rows[1].mean_test_acc) + ")");
}

void criterion_citeseer(const fs::path& work_dir) {
    LinqsFiles files = find_linqs("MPGCN_CITESEER_DIR", "data/citeseer", "citeseer");
    if (!files.found) {
        report("SKIP", 5,
               "optional citation benchmark needs user-supplied files (looked for "
               "citeseer.content/citeseer.cites under $MPGCN_CITESEER_DIR and ./data/citeseer)");
        return;
    }
    const std::string out = (work_dir / "citeseer").string();
    fs::create_directories(out);
    BenchResult result = run_bench(protocol_configs(files, out));
    const double gcn = result.rows[0].mean_test_acc;
    const double mp = result.rows[2].mean_test_acc;
    const bool ok = gcn >= 0.56 && gcn <= 0.72 && mp >= gcn - 0.005;
    pass_fail(ok, 5,
              "citation benchmark B (gcn mean " + fmt(gcn) + " in [0.56, 0.72]; mpgcn mean " +
                  fmt(mp) + " >= gcn-0.005)");
}

// ---------------------------------------------------------------- 6

int64_t median_epochs(const RepeatResult& result) {
    std::vector<int64_t> values;
    for (const auto& run : result.runs) values.push_back(run.epochs_to_95pct_val);
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

void criterion_convergence() {
    Dataset ds = generate_sbm(4, 60, 0.1, 0.02, 16, 1);

    ModelSpec gcn;
    gcn.kind = ArchKind::Sequential;
    gcn.in_dim = 16;
    gcn.hidden = 64;
    gcn.classes = 4;
    gcn.depth = 3;
    ModelSpec mp = gcn;
    mp.kind = ArchKind::Multipath;
    mp.paths = {1, 2};
    mp.shared_stem = 0;

    const std::vector<std::vector<uint64_t>> seed_lists = {
        {1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
        {11, 12, 13, 14, 15, 16, 17, 18, 19, 20},
        {21, 22, 23, 24, 25, 26, 27, 28, 29, 30},
    };

    int wins = 0;
    std::string detail;
    for (size_t list = 0; list < seed_lists.size(); ++list) {
        TrainConfig cfg;
        cfg.epochs = 100;
        cfg.seeds = seed_lists[list];
        const int64_t mp_median = median_epochs(repeat_runs(mp, ds, cfg, SplitSpec{20, 30}));
        const int64_t gcn_median = median_epochs(repeat_runs(gcn, ds, cfg, SplitSpec{20, 30}));
        if (mp_median <= gcn_median) ++wins;
        detail += (list ? ", " : "") + std::string("list") + std::to_string(list + 1) + " mpgcn " +
                  std::to_string(mp_median) + " vs gcn " + std::to_string(gcn_median);
    }
    pass_fail(wins >= 2, 6,
              "convergence speed: mpgcn median epochs-to-95%-val <= gcn in " + std::to_string(wins) +
                  "/3 seed lists (" + detail + ")");
}

// ---------------------------------------------------------------- 7

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void criterion_determinism(const std::string& cli, const fs::path& work_dir) {
    const fs::path dir = work_dir / "determinism";
    fs::create_directories(dir);

    ExperimentConfig base;
    base.dataset.kind = "sbm";
    base.dataset.sbm_blocks = 2;
    base.dataset.sbm_per_block = 12;
    base.dataset.sbm_p_intra = 0.6;
    base.dataset.sbm_p_inter = 0.1;
    base.dataset.sbm_dim = 4;
    base.dataset.sbm_seed = 3;
    base.dataset.train_per_class = 4;
    base.dataset.val_per_class = 3;
    base.model.hidden = 8;
    base.train.epochs = 5;
    base.train.seeds = {1, 2};
    base.output.metrics = (dir / "metrics.csv").string();
    base.output.summary = (dir / "summary.csv").string();

    std::array<ExperimentConfig, 3> cfgs = {base, base, base};
    cfgs[0].model.arch = "gcn";
    cfgs[0].model.depth = 3;
    cfgs[1].model.arch = "resgcn";
    cfgs[1].model.depth = 3;
    cfgs[2].model.arch = "mpgcn";
    cfgs[2].model.paths = {1, 2};
    cfgs[2].model.depth = 0;

    const char* names[3] = {"gcn", "resgcn", "mpgcn"};
    std::string flags;
    for (int i = 0; i < 3; ++i) {
        const std::string cfg_path = (dir / (std::string(names[i]) + ".json")).string();
        std::ofstream out(cfg_path, std::ios::binary);
        out << config_to_json(cfgs[static_cast<size_t>(i)]).dump(2) << "\n";
        flags += " --" + std::string(names[i]) + " " + cfg_path;
    }

    const std::string log = (dir / "cli.log").string();
    const std::string command = cli + " bench" + flags + " >> " + log + " 2>&1";

    auto invoke = [&]() {
        if (cli.empty()) { // fall back to the in-process harness
            BenchResult result = run_bench(cfgs);
            write_outputs(base.output, result,
                          {{"gcn", cfgs[0]}, {"resgcn", cfgs[1]}, {"mpgcn", cfgs[2]}});
            return true;
        }
        return std::system(command.c_str()) == 0;
    };

    if (!invoke()) {
        pass_fail(false, 7, "determinism (first bench invocation failed, see " + log + ")");
        return;
    }
    const std::string metrics1 = slurp(base.output.metrics);
    const std::string summary1 = slurp(base.output.summary);
    const std::string echo1 = slurp(base.output.summary + ".config.json");

    if (!invoke()) {
        pass_fail(false, 7, "determinism (second bench invocation failed, see " + log + ")");
        return;
    }
    const bool ok = metrics1 == slurp(base.output.metrics) && summary1 == slurp(base.output.summary) &&
                    echo1 == slurp(base.output.summary + ".config.json");
    pass_fail(ok, 7,
              std::string("determinism: repeated bench invocation reproduces metrics, summary and "
                          "config echo byte for byte") +
                  (cli.empty() ? " (in-process harness; no --cli given)" : ""));
}

} // namespace

int main(int argc, char** argv) {
    std::string cli;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
    if (cli.empty())
        if (const char* env = std::getenv("MPGCN_CLI")) cli = env;

    const fs::path work_dir = fs::temp_directory_path() / "mpgcn_acceptance";
    fs::create_directories(work_dir);

    try {
        criterion_gradients();
        criterion_oracle();
        criterion_parity();
        criterion_cora(work_dir);
        criterion_citeseer(work_dir);
        criterion_convergence();
        criterion_determinism(cli, work_dir);
        report("NOTE", 8,
               "full-scale web-graph and co-purchase runs stay out of desk scale by design; their "
               "architecture configurations are exercised by criteria 1-3");
    } catch (const std::exception& e) {
        std::cerr << "acceptance suite aborted: " << e.what() << "\n";
        return 2;
    }

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all checked criteria passed\n");
    return 0;
}
