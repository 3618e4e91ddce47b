#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpgcn/csr.hpp"
#include "mpgcn/tensor.hpp"

namespace mpgcn {

/// Node-classification dataset. The edge list is kept canonical: symmetric
/// closure, duplicates collapsed, row-major sorted (exactly the stored
/// pattern of the adjacency it builds). Masks are empty until splits are
/// made.
struct Dataset {
    EdgeList graph;
    Tensor features;                  // num_nodes x d
    std::vector<int32_t> labels;      // one class id per node
    int64_t num_classes = 0;
    std::vector<uint8_t> train_mask;  // empty or num_nodes flags
    std::vector<uint8_t> val_mask;
    std::vector<uint8_t> test_mask;
    std::string name;
    int64_t skipped_citations = 0;    // dangling .cites lines, tallied at load

    int64_t num_nodes() const { return features.rows; }
    bool has_masks() const { return !train_mask.empty(); }
};

/// Parses the LINQS plain-text pair:
///   .content lines: <node_id> TAB <f_1> .. <f_d> TAB <class_label>
///   .cites lines:   <cited_id> TAB <citing_id>
/// String node ids map to dense integers in first-appearance order, class
/// labels to ids in sorted order. Citations touching unknown ids are
/// skipped and counted in skipped_citations. Masks are left unset.
Dataset load_linqs(const std::string& content_path, const std::string& cites_path);

/// Stochastic block model: `blocks` communities of `per_block` nodes,
/// undirected edges without self loops, label = block id. Features are the
/// one-hot block id in the first `blocks` columns plus uniform noise in
/// [0, 0.1) elsewhere. Deterministic per seed. Masks are left unset.
Dataset generate_sbm(int64_t blocks, int64_t per_block, double p_intra, double p_inter,
                     int64_t d, uint64_t seed);

/// Per class: sample train_per_class then val_per_class nodes without
/// replacement from the split sub-stream of `seed`; the remainder is test.
/// The masks partition the node set.
Dataset make_splits(const Dataset& ds, int64_t train_per_class, int64_t val_per_class,
                    uint64_t seed);

/// Scale each feature row to sum 1; zero rows are left untouched.
void row_normalize_features(Dataset& ds);

/// Binary cache format (little-endian):
///   bytes 0..7   magic "MPGCNDS\0"
///   bytes 8..11  u32 version = 1
///   bytes 12..15 u32 reserved = 0
///   u64 n, d, c, nnz
///   (n+1) x u64 row_offsets, nnz x u64 col_indices,
///   n*d x f64 features (row-major), n x u32 labels
/// Masks are not cached; they are a property of a split seed.
void save_cache(const Dataset& ds, const std::string& path);
Dataset load_cache(const std::string& path);

std::vector<int32_t> mask_ids(const std::vector<uint8_t>& mask);

} // namespace mpgcn
