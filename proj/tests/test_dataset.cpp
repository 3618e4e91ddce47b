#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "mpgcn/dataset.hpp"
#include "support/dense_reference.hpp"

using namespace mpgcn;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("mpgcn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int n = 0;
        return n;
    }
    std::string file(const std::string& name, const std::string& text) const {
        const std::string full = (path / name).string();
        std::ofstream out(full, std::ios::binary);
        out << text;
        return full;
    }
};

const char* kContent =
    "paper_a\t1\t0\t0\t1\tml\n"
    "paper_b\t0\t1\t0\t0\ttheory\n"
    "paper_c\t0\t0\t1\t1\tml\n";

const char* kCites =
    "paper_a\tpaper_b\n"
    "paper_b\tpaper_c\n";

} // namespace

TEST_SUITE("dataset") {

TEST_CASE("load_linqs: hand-written fixture parses to the expected dataset") {
    TempDir dir;
    Dataset ds = load_linqs(dir.file("x.content", kContent), dir.file("x.cites", kCites));

    CHECK(ds.num_nodes() == 3);
    CHECK(ds.num_classes == 2);
    CHECK(ds.features.cols == 4);
    CHECK(ds.name == "x");
    CHECK(ds.skipped_citations == 0);

    // first-appearance node ids: a=0, b=1, c=2; sorted labels: ml=0, theory=1
    CHECK(ds.labels == std::vector<int32_t>{0, 1, 0});
    CHECK(ds.features(0, 0) == 1.0);
    CHECK(ds.features(0, 3) == 1.0);
    CHECK(ds.features(1, 1) == 1.0);
    CHECK(ds.features(2, 2) == 1.0);

    // symmetric adjacency: edges a-b and b-c in both directions
    CsrMatrix adj = build_csr(ds.graph);
    ref::Mat expect = ref::dense_adjacency(3, {{0, 1}, {1, 2}});
    CHECK(ref::max_abs_diff(ref::from_tensor(to_dense(adj)), expect) == 0.0);
}

TEST_CASE("load_linqs: dangling citations are skipped and tallied") {
    TempDir dir;
    const std::string cites = std::string(kCites) + "paper_a\tpaper_unknown\n";
    Dataset ds = load_linqs(dir.file("x.content", kContent), dir.file("x.cites", cites));
    CHECK(ds.skipped_citations == 1);
    CHECK(build_csr(ds.graph).nnz() == 4); // same graph as without the dangling line
}

TEST_CASE("load_linqs: empty content file is an error") {
    TempDir dir;
    CHECK_THROWS_WITH_AS(load_linqs(dir.file("e.content", ""), dir.file("e.cites", "")),
                         doctest::Contains("empty"), std::runtime_error);
}

TEST_CASE("load_linqs: malformed lines report their line number") {
    TempDir dir;
    const std::string bad = std::string(kContent) + "paper_d\tml\n"; // only 2 fields
    CHECK_THROWS_WITH_AS(load_linqs(dir.file("b.content", bad), dir.file("b.cites", kCites)),
                         doctest::Contains(":4"), std::runtime_error);

    const std::string bad_cites = std::string(kCites) + "paper_a\n";
    CHECK_THROWS_WITH_AS(load_linqs(dir.file("x.content", kContent), dir.file("bad.cites", bad_cites)),
                         doctest::Contains(":3"), std::runtime_error);
}

TEST_CASE("load_linqs: inconsistent feature width is an error") {
    TempDir dir;
    const std::string bad = std::string(kContent) + "paper_d\t1\t0\ttheory\n"; // d=2, not 4
    CHECK_THROWS_WITH_AS(load_linqs(dir.file("w.content", bad), dir.file("w.cites", kCites)),
                         doctest::Contains("feature width"), std::runtime_error);
}

TEST_CASE("load_linqs: id assignment is order-stable") {
    TempDir dir;
    Dataset a = load_linqs(dir.file("a.content", kContent), dir.file("a.cites", kCites));
    Dataset b = load_linqs(dir.file("b.content", kContent), dir.file("b.cites", kCites));
    CHECK(a.labels == b.labels);
    CHECK(a.graph.edges == b.graph.edges);
    CHECK(a.features.data == b.features.data);
}

TEST_CASE("generate_sbm: degenerate probabilities") {
    Dataset cliques = generate_sbm(2, 3, 1.0, 0.0, 4, 1);
    // two disjoint 3-cliques: every intra pair present, no inter edges
    CsrMatrix adj = build_csr(cliques.graph);
    Tensor d = to_dense(adj);
    for (int64_t i = 0; i < 6; ++i)
        for (int64_t j = 0; j < 6; ++j) {
            const bool same_block = (i / 3) == (j / 3);
            CHECK(d(i, j) == ((same_block && i != j) ? 1.0 : 0.0));
        }

    Dataset empty = generate_sbm(2, 3, 0.0, 0.0, 4, 1);
    CHECK(empty.graph.edges.empty());
}

TEST_CASE("generate_sbm: adjacency is symmetric with zero diagonal") {
    Dataset ds = generate_sbm(3, 10, 0.5, 0.1, 5, 3);
    Tensor d = to_dense(build_csr(ds.graph));
    for (int64_t i = 0; i < d.rows; ++i) {
        CHECK(d(i, i) == 0.0);
        for (int64_t j = 0; j < d.cols; ++j) CHECK(d(i, j) == d(j, i));
    }
}

TEST_CASE("generate_sbm: intra-block edge count concentrates around its mean") {
    Dataset ds = generate_sbm(2, 50, 0.8, 0.05, 4, 1);
    int64_t intra = 0;
    for (const auto& [u, v] : ds.graph.edges) {
        if (u < v && ds.labels[static_cast<size_t>(u)] == ds.labels[static_cast<size_t>(v)]) ++intra;
    }
    // Binomial(2*C(50,2), 0.8): mean 1960, sigma ~19.8
    const double mean = 0.8 * 2.0 * (50.0 * 49.0 / 2.0);
    const double sigma = std::sqrt(2.0 * (50.0 * 49.0 / 2.0) * 0.8 * 0.2);
    CHECK(std::abs(static_cast<double>(intra) - mean) <= 3.0 * sigma);
}

TEST_CASE("generate_sbm: features carry the one-hot block and bounded noise") {
    Dataset ds = generate_sbm(3, 4, 0.5, 0.1, 6, 2);
    for (int64_t i = 0; i < ds.num_nodes(); ++i) {
        for (int64_t j = 0; j < 3; ++j)
            CHECK(ds.features(i, j) == (j == ds.labels[static_cast<size_t>(i)] ? 1.0 : 0.0));
        for (int64_t j = 3; j < 6; ++j) {
            CHECK(ds.features(i, j) >= 0.0);
            CHECK(ds.features(i, j) < 0.1);
        }
    }
}

TEST_CASE("generate_sbm: invalid probabilities and widths are rejected") {
    CHECK_THROWS_AS(generate_sbm(2, 3, 0.1, 0.5, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_sbm(2, 3, 1.5, 0.1, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_sbm(5, 3, 0.5, 0.1, 4, 1), std::invalid_argument);
}

TEST_CASE("make_splits: masks partition the nodes with the requested sizes") {
    Dataset ds = make_splits(generate_sbm(3, 20, 0.5, 0.1, 5, 4), 5, 3, 11);
    CHECK(mask_ids(ds.train_mask).size() == 15);
    CHECK(mask_ids(ds.val_mask).size() == 9);
    CHECK(mask_ids(ds.test_mask).size() == 36);
    for (int64_t i = 0; i < ds.num_nodes(); ++i) {
        const int total = ds.train_mask[static_cast<size_t>(i)] + ds.val_mask[static_cast<size_t>(i)] +
                          ds.test_mask[static_cast<size_t>(i)];
        CHECK(total == 1);
    }
    // every class appears in the train mask
    for (int64_t c = 0; c < ds.num_classes; ++c) {
        bool found = false;
        for (int32_t id : mask_ids(ds.train_mask))
            found = found || ds.labels[static_cast<size_t>(id)] == c;
        CHECK(found);
    }
}

TEST_CASE("make_splits: deterministic per seed, different across seeds") {
    Dataset base = generate_sbm(2, 30, 0.5, 0.1, 4, 5);
    Dataset a = make_splits(base, 5, 5, 3);
    Dataset b = make_splits(base, 5, 5, 3);
    Dataset c = make_splits(base, 5, 5, 4);
    CHECK(a.train_mask == b.train_mask);
    CHECK(a.val_mask == b.val_mask);
    CHECK(a.train_mask != c.train_mask);
}

TEST_CASE("make_splits: class too small names the class") {
    Dataset ds = generate_sbm(2, 5, 0.5, 0.1, 4, 6);
    CHECK_THROWS_WITH_AS(make_splits(ds, 4, 1, 1), doctest::Contains("class 0"),
                         std::invalid_argument);
}

TEST_CASE("cache: round trip reproduces the dataset bitwise") {
    TempDir dir;
    Dataset ds = generate_sbm(3, 7, 0.6, 0.1, 5, 8);
    const std::string path = (dir.path / "ds.bin").string();
    save_cache(ds, path);
    Dataset back = load_cache(path);

    CHECK(back.graph.num_nodes == ds.graph.num_nodes);
    CHECK(back.graph.edges == ds.graph.edges);
    CHECK(back.features.data == ds.features.data);
    CHECK(back.labels == ds.labels);
    CHECK(back.num_classes == ds.num_classes);

    // saving the reloaded dataset produces identical bytes
    const std::string path2 = (dir.path / "ds2.bin").string();
    save_cache(back, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("cache: linqs datasets survive the round trip too") {
    TempDir dir;
    Dataset ds = load_linqs(dir.file("x.content", kContent), dir.file("x.cites", kCites));
    const std::string path = (dir.path / "linqs.bin").string();
    save_cache(ds, path);
    Dataset back = load_cache(path);
    CHECK(back.graph.edges == ds.graph.edges);
    CHECK(back.features.data == ds.features.data);
    CHECK(back.labels == ds.labels);
}

TEST_CASE("cache: corrupted files are rejected") {
    TempDir dir;
    const std::string bad = dir.file("bad.bin", "definitely not a cache");
    CHECK_THROWS_WITH_AS(load_cache(bad), doctest::Contains("magic"), std::runtime_error);

    Dataset ds = generate_sbm(2, 3, 0.5, 0.1, 4, 9);
    const std::string path = (dir.path / "trunc.bin").string();
    save_cache(ds, path);
    std::string bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    dir.file("trunc.bin", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_WITH_AS(load_cache(path), doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("row_normalize_features: rows sum to one, zero rows untouched") {
    Dataset ds = generate_sbm(2, 4, 0.5, 0.1, 4, 10);
    for (int64_t j = 0; j < 4; ++j) ds.features(0, j) = 0.0;
    row_normalize_features(ds);
    for (int64_t j = 0; j < 4; ++j) CHECK(ds.features(0, j) == 0.0);
    for (int64_t i = 1; i < ds.num_nodes(); ++i) {
        double sum = 0.0;
        for (int64_t j = 0; j < 4; ++j) sum += ds.features(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

} // TEST_SUITE
