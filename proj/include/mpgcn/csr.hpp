#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mpgcn/tensor.hpp"

namespace mpgcn {

/// Ingestion-side graph representation: undirected edges over num_nodes
/// vertices. Each listed edge implies both directions when the adjacency
/// is built.
struct EdgeList {
    int64_t num_nodes = 0;
    std::vector<std::pair<int64_t, int64_t>> edges;
};

/// Compressed sparse row matrix. Within each row, col_indices are strictly
/// increasing; row_offsets[0] == 0 and row_offsets[num_rows] == nnz.
struct CsrMatrix {
    int64_t num_rows = 0;
    int64_t num_cols = 0;
    std::vector<int64_t> row_offsets;
    std::vector<int64_t> col_indices;
    std::vector<double> values;

    int64_t nnz() const { return static_cast<int64_t>(col_indices.size()); }
};

/// Symmetric binary adjacency from an edge list: value 1.0 per direction,
/// duplicates collapsed, input self-loops kept once, rows sorted.
CsrMatrix build_csr(const EdgeList& graph);

/// Sets every diagonal entry to 1.0 (overwriting any existing diagonal
/// value, so explicit self-loops in raw data cannot double-count).
CsrMatrix add_self_loops(const CsrMatrix& a);

/// D^(-1/2) * A_hat * D^(-1/2) with D the diagonal of row sums of A_hat.
/// Requires a square matrix with non-negative values and a positive
/// diagonal (self-loops present). Output keeps the input sparsity pattern.
CsrMatrix symmetric_normalize(const CsrMatrix& a_hat);

/// Exact sparse-dense product a * x with a fixed per-row summation order,
/// so results are bitwise reproducible.
Tensor spmm(const CsrMatrix& a, const Tensor& x);

Tensor to_dense(const CsrMatrix& a);

/// All stored (row, col) pairs in row-major order. For a symmetric binary
/// adjacency this is the canonical edge list: running it back through
/// build_csr reproduces the matrix exactly.
EdgeList stored_edges(const CsrMatrix& a);

} // namespace mpgcn
