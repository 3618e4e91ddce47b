#include "mpgcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "mpgcn/rng.hpp"

namespace mpgcn {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    for (;;) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

double parse_feature(const std::string& field, const std::string& path, int64_t line_no) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed feature value '" +
                                 field + "'");
    return value;
}

std::string file_stem(const std::string& path) {
    size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

void canonicalize_graph(Dataset& ds, const EdgeList& raw) {
    ds.graph = stored_edges(build_csr(raw));
}

} // namespace

Dataset load_linqs(const std::string& content_path, const std::string& cites_path) {
    std::ifstream content(content_path);
    if (!content) throw std::runtime_error("cannot open " + content_path);

    std::unordered_map<std::string, int64_t> node_ids;
    std::vector<std::vector<double>> feature_rows;
    std::vector<std::string> label_names;
    int64_t d = -1;

    std::string line;
    int64_t line_no = 0;
    while (std::getline(content, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() < 3)
            throw std::runtime_error(content_path + ":" + std::to_string(line_no) +
                                     ": expected at least 3 tab-separated fields, got " +
                                     std::to_string(fields.size()));
        const int64_t width = static_cast<int64_t>(fields.size()) - 2;
        if (d < 0) {
            d = width;
        } else if (width != d) {
            throw std::runtime_error(content_path + ":" + std::to_string(line_no) +
                                     ": inconsistent feature width, expected " + std::to_string(d) +
                                     " got " + std::to_string(width));
        }
        auto [it, inserted] = node_ids.emplace(fields[0], static_cast<int64_t>(node_ids.size()));
        if (!inserted)
            throw std::runtime_error(content_path + ":" + std::to_string(line_no) +
                                     ": duplicate node id '" + fields[0] + "'");
        std::vector<double> row(static_cast<size_t>(d));
        for (int64_t j = 0; j < d; ++j)
            row[static_cast<size_t>(j)] = parse_feature(fields[static_cast<size_t>(j) + 1], content_path, line_no);
        feature_rows.push_back(std::move(row));
        label_names.push_back(fields.back());
        (void)it;
    }
    if (feature_rows.empty()) throw std::runtime_error(content_path + ": empty .content file");

    const int64_t n = static_cast<int64_t>(feature_rows.size());

    // class labels get ids in sorted order
    std::map<std::string, int32_t> label_ids;
    for (const auto& name : label_names) label_ids.emplace(name, 0);
    int32_t next_label = 0;
    for (auto& [name, id] : label_ids) id = next_label++;

    Dataset ds;
    ds.name = file_stem(content_path);
    ds.num_classes = next_label;
    ds.features = Tensor(n, d);
    ds.labels.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        ds.labels[static_cast<size_t>(i)] = label_ids.at(label_names[static_cast<size_t>(i)]);
        for (int64_t j = 0; j < d; ++j)
            ds.features(i, j) = feature_rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }

    std::ifstream cites(cites_path);
    if (!cites) throw std::runtime_error("cannot open " + cites_path);
    EdgeList raw;
    raw.num_nodes = n;
    line_no = 0;
    while (std::getline(cites, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() != 2)
            throw std::runtime_error(cites_path + ":" + std::to_string(line_no) +
                                     ": expected 2 tab-separated fields, got " +
                                     std::to_string(fields.size()));
        auto a = node_ids.find(fields[0]);
        auto b = node_ids.find(fields[1]);
        if (a == node_ids.end() || b == node_ids.end()) {
            ++ds.skipped_citations;
            continue;
        }
        raw.edges.emplace_back(a->second, b->second);
    }
    canonicalize_graph(ds, raw);
    return ds;
}

Dataset generate_sbm(int64_t blocks, int64_t per_block, double p_intra, double p_inter,
                     int64_t d, uint64_t seed) {
    if (blocks < 1 || per_block < 1)
        throw std::invalid_argument("generate_sbm: blocks and per_block must be >= 1");
    if (p_intra < 0.0 || p_intra > 1.0 || p_inter < 0.0 || p_inter > 1.0 || p_inter > p_intra)
        throw std::invalid_argument("generate_sbm: need 0 <= p_inter <= p_intra <= 1");
    if (d < blocks)
        throw std::invalid_argument("generate_sbm: feature dim " + std::to_string(d) +
                                    " smaller than block count " + std::to_string(blocks));

    const int64_t n = blocks * per_block;
    Dataset ds;
    ds.name = "sbm-" + std::to_string(blocks) + "x" + std::to_string(per_block);
    ds.num_classes = blocks;
    ds.labels.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) ds.labels[static_cast<size_t>(i)] = static_cast<int32_t>(i / per_block);

    Rng edge_rng = substream(seed, "sbm.edges");
    EdgeList raw;
    raw.num_nodes = n;
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = i + 1; j < n; ++j) {
            const double p = ds.labels[static_cast<size_t>(i)] == ds.labels[static_cast<size_t>(j)] ? p_intra : p_inter;
            if (edge_rng.uniform01() < p) raw.edges.emplace_back(i, j);
        }
    }
    canonicalize_graph(ds, raw);

    Rng feat_rng = substream(seed, "sbm.features");
    ds.features = Tensor(n, d);
    for (int64_t i = 0; i < n; ++i) {
        ds.features(i, ds.labels[static_cast<size_t>(i)]) = 1.0;
        for (int64_t j = blocks; j < d; ++j) ds.features(i, j) = feat_rng.uniform(0.0, 0.1);
    }
    return ds;
}

Dataset make_splits(const Dataset& ds, int64_t train_per_class, int64_t val_per_class,
                    uint64_t seed) {
    if (train_per_class < 1 || val_per_class < 0)
        throw std::invalid_argument("make_splits: need train_per_class >= 1 and val_per_class >= 0");

    const int64_t n = ds.num_nodes();
    std::vector<std::vector<int64_t>> by_class(static_cast<size_t>(ds.num_classes));
    for (int64_t i = 0; i < n; ++i) by_class[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])].push_back(i);

    Dataset out = ds;
    out.train_mask.assign(static_cast<size_t>(n), 0);
    out.val_mask.assign(static_cast<size_t>(n), 0);
    out.test_mask.assign(static_cast<size_t>(n), 0);

    Rng rng = substream(seed, "splits");
    for (int64_t c = 0; c < ds.num_classes; ++c) {
        auto& members = by_class[static_cast<size_t>(c)];
        if (static_cast<int64_t>(members.size()) <= train_per_class + val_per_class)
            throw std::invalid_argument("make_splits: class " + std::to_string(c) + " has only " +
                                        std::to_string(members.size()) + " members, needs more than " +
                                        std::to_string(train_per_class + val_per_class));
        // Fisher-Yates on the ascending member list
        for (size_t k = members.size() - 1; k > 0; --k) {
            const size_t j = static_cast<size_t>(rng.below(static_cast<uint64_t>(k + 1)));
            std::swap(members[k], members[j]);
        }
        for (int64_t k = 0; k < static_cast<int64_t>(members.size()); ++k) {
            const int64_t node = members[static_cast<size_t>(k)];
            if (k < train_per_class)
                out.train_mask[static_cast<size_t>(node)] = 1;
            else if (k < train_per_class + val_per_class)
                out.val_mask[static_cast<size_t>(node)] = 1;
            else
                out.test_mask[static_cast<size_t>(node)] = 1;
        }
    }
    return out;
}

void row_normalize_features(Dataset& ds) {
    for (int64_t i = 0; i < ds.features.rows; ++i) {
        double sum = 0.0;
        for (int64_t j = 0; j < ds.features.cols; ++j) sum += ds.features(i, j);
        if (sum == 0.0) continue;
        for (int64_t j = 0; j < ds.features.cols; ++j) ds.features(i, j) /= sum;
    }
}

namespace {

constexpr char kMagic[8] = {'M', 'P', 'G', 'C', 'N', 'D', 'S', '\0'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(buf, bits);
}

struct Reader {
    std::string data;
    size_t pos = 0;
    std::string path;

    void need(size_t bytes) {
        if (pos + bytes > data.size()) throw std::runtime_error(path + ": truncated cache file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

} // namespace

void save_cache(const Dataset& ds, const std::string& path) {
    CsrMatrix adj = build_csr(ds.graph);
    const uint64_t n = static_cast<uint64_t>(ds.num_nodes());
    const uint64_t d = static_cast<uint64_t>(ds.features.cols);

    std::string buf;
    buf.append(kMagic, 8);
    put_u32(buf, kVersion);
    put_u32(buf, 0);
    put_u64(buf, n);
    put_u64(buf, d);
    put_u64(buf, static_cast<uint64_t>(ds.num_classes));
    put_u64(buf, static_cast<uint64_t>(adj.nnz()));
    for (int64_t v : adj.row_offsets) put_u64(buf, static_cast<uint64_t>(v));
    for (int64_t v : adj.col_indices) put_u64(buf, static_cast<uint64_t>(v));
    for (double v : ds.features.data) put_f64(buf, v);
    for (int32_t v : ds.labels) put_u32(buf, static_cast<uint32_t>(v));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("failed writing " + path);
}

Dataset load_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    Reader r;
    r.path = path;
    r.data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

    r.need(8);
    if (std::memcmp(r.data.data(), kMagic, 8) != 0)
        throw std::runtime_error(path + ": not a dataset cache file (bad magic)");
    r.pos = 8;
    const uint32_t version = r.u32();
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported cache version " + std::to_string(version));
    r.u32(); // reserved

    const uint64_t n = r.u64();
    const uint64_t d = r.u64();
    const uint64_t c = r.u64();
    const uint64_t nnz = r.u64();

    CsrMatrix adj;
    adj.num_rows = static_cast<int64_t>(n);
    adj.num_cols = static_cast<int64_t>(n);
    adj.row_offsets.resize(n + 1);
    for (auto& v : adj.row_offsets) v = static_cast<int64_t>(r.u64());
    adj.col_indices.resize(nnz);
    for (auto& v : adj.col_indices) v = static_cast<int64_t>(r.u64());
    adj.values.assign(nnz, 1.0);

    Dataset ds;
    ds.name = file_stem(path);
    ds.num_classes = static_cast<int64_t>(c);
    ds.graph = stored_edges(adj);
    ds.features = Tensor(static_cast<int64_t>(n), static_cast<int64_t>(d));
    for (auto& v : ds.features.data) v = r.f64();
    ds.labels.resize(n);
    for (auto& v : ds.labels) v = static_cast<int32_t>(r.u32());
    if (r.pos != r.data.size())
        throw std::runtime_error(path + ": trailing bytes after dataset payload");
    return ds;
}

std::vector<int32_t> mask_ids(const std::vector<uint8_t>& mask) {
    std::vector<int32_t> ids;
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) ids.push_back(static_cast<int32_t>(i));
    return ids;
}

} // namespace mpgcn
