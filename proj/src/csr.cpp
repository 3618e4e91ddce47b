#include "mpgcn/csr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpgcn {

CsrMatrix build_csr(const EdgeList& graph) {
    const int64_t n = graph.num_nodes;
    if (n < 0) throw std::invalid_argument("build_csr: negative node count");

    std::vector<std::vector<int64_t>> rows(static_cast<size_t>(n));
    for (const auto& [u, v] : graph.edges) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw std::invalid_argument("build_csr: edge (" + std::to_string(u) + "," +
                                        std::to_string(v) + ") references a node id outside [0," +
                                        std::to_string(n) + ")");
        rows[static_cast<size_t>(u)].push_back(v);
        if (u != v) rows[static_cast<size_t>(v)].push_back(u);
    }

    CsrMatrix out;
    out.num_rows = n;
    out.num_cols = n;
    out.row_offsets.resize(static_cast<size_t>(n) + 1, 0);
    for (int64_t i = 0; i < n; ++i) {
        auto& r = rows[static_cast<size_t>(i)];
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
        for (int64_t c : r) {
            out.col_indices.push_back(c);
            out.values.push_back(1.0);
        }
        out.row_offsets[static_cast<size_t>(i) + 1] = static_cast<int64_t>(out.col_indices.size());
    }
    return out;
}

CsrMatrix add_self_loops(const CsrMatrix& a) {
    if (a.num_rows != a.num_cols)
        throw std::invalid_argument("add_self_loops: matrix is " + std::to_string(a.num_rows) + "x" +
                                    std::to_string(a.num_cols) + ", expected square");

    CsrMatrix out;
    out.num_rows = a.num_rows;
    out.num_cols = a.num_cols;
    out.row_offsets.resize(static_cast<size_t>(a.num_rows) + 1, 0);
    out.col_indices.reserve(a.col_indices.size() + static_cast<size_t>(a.num_rows));
    out.values.reserve(a.col_indices.size() + static_cast<size_t>(a.num_rows));

    for (int64_t i = 0; i < a.num_rows; ++i) {
        bool placed_diag = false;
        for (int64_t k = a.row_offsets[static_cast<size_t>(i)]; k < a.row_offsets[static_cast<size_t>(i) + 1]; ++k) {
            const int64_t c = a.col_indices[static_cast<size_t>(k)];
            if (!placed_diag && c >= i) {
                out.col_indices.push_back(i);
                out.values.push_back(1.0);
                placed_diag = true;
                if (c == i) continue; // overwrite existing diagonal
            }
            out.col_indices.push_back(c);
            out.values.push_back(a.values[static_cast<size_t>(k)]);
        }
        if (!placed_diag) {
            out.col_indices.push_back(i);
            out.values.push_back(1.0);
        }
        out.row_offsets[static_cast<size_t>(i) + 1] = static_cast<int64_t>(out.col_indices.size());
    }
    return out;
}

CsrMatrix symmetric_normalize(const CsrMatrix& a_hat) {
    if (a_hat.num_rows != a_hat.num_cols)
        throw std::invalid_argument("symmetric_normalize: matrix is " + std::to_string(a_hat.num_rows) +
                                    "x" + std::to_string(a_hat.num_cols) + ", expected square");

    const int64_t n = a_hat.num_rows;
    std::vector<double> degree(static_cast<size_t>(n), 0.0);
    for (int64_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        bool diag_positive = false;
        for (int64_t k = a_hat.row_offsets[static_cast<size_t>(i)]; k < a_hat.row_offsets[static_cast<size_t>(i) + 1]; ++k) {
            const double v = a_hat.values[static_cast<size_t>(k)];
            if (v < 0.0)
                throw std::invalid_argument("symmetric_normalize: negative value at row " + std::to_string(i));
            if (a_hat.col_indices[static_cast<size_t>(k)] == i && v > 0.0) diag_positive = true;
            row_sum += v;
        }
        if (!diag_positive || row_sum <= 0.0)
            throw std::invalid_argument("symmetric_normalize: node " + std::to_string(i) +
                                        " has no positive self-loop (zero row sum)");
        degree[static_cast<size_t>(i)] = row_sum;
    }

    CsrMatrix out = a_hat;
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t k = out.row_offsets[static_cast<size_t>(i)]; k < out.row_offsets[static_cast<size_t>(i) + 1]; ++k) {
            const int64_t c = out.col_indices[static_cast<size_t>(k)];
            // one sqrt of the degree product keeps d_i == d_j entries exact
            out.values[static_cast<size_t>(k)] /=
                std::sqrt(degree[static_cast<size_t>(i)] * degree[static_cast<size_t>(c)]);
        }
    }
    return out;
}

Tensor spmm(const CsrMatrix& a, const Tensor& x) {
    if (a.num_cols != x.rows)
        throw std::invalid_argument("spmm: dimension mismatch, matrix is " + std::to_string(a.num_rows) +
                                    "x" + std::to_string(a.num_cols) + " but dense operand is " + x.shape_str());

    Tensor out(a.num_rows, x.cols);
    for (int64_t i = 0; i < a.num_rows; ++i) {
        double* out_row = &out.data[static_cast<size_t>(i * x.cols)];
        for (int64_t k = a.row_offsets[static_cast<size_t>(i)]; k < a.row_offsets[static_cast<size_t>(i) + 1]; ++k) {
            const double v = a.values[static_cast<size_t>(k)];
            const double* x_row = &x.data[static_cast<size_t>(a.col_indices[static_cast<size_t>(k)] * x.cols)];
            for (int64_t j = 0; j < x.cols; ++j) out_row[j] += v * x_row[j];
        }
    }
    return out;
}

Tensor to_dense(const CsrMatrix& a) {
    Tensor out(a.num_rows, a.num_cols);
    for (int64_t i = 0; i < a.num_rows; ++i)
        for (int64_t k = a.row_offsets[static_cast<size_t>(i)]; k < a.row_offsets[static_cast<size_t>(i) + 1]; ++k)
            out(i, a.col_indices[static_cast<size_t>(k)]) = a.values[static_cast<size_t>(k)];
    return out;
}

EdgeList stored_edges(const CsrMatrix& a) {
    EdgeList g;
    g.num_nodes = a.num_rows;
    g.edges.reserve(a.col_indices.size());
    for (int64_t i = 0; i < a.num_rows; ++i)
        for (int64_t k = a.row_offsets[static_cast<size_t>(i)]; k < a.row_offsets[static_cast<size_t>(i) + 1]; ++k)
            g.edges.emplace_back(i, a.col_indices[static_cast<size_t>(k)]);
    return g;
}

} // namespace mpgcn
