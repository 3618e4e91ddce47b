#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mpgcn/csr.hpp"
#include "mpgcn/rng.hpp"
#include "mpgcn/tensor.hpp"

namespace mpgcn {

using NodeId = int32_t;
inline constexpr NodeId kNoNode = -1;

/// Reverse-mode differentiation tape. Operations append nodes in
/// topological order (inputs always have smaller ids), values are computed
/// eagerly, and backward() runs one reverse sweep from a scalar root.
///
/// Every produced tensor is checked for NaN/Inf; a non-finite entry aborts
/// the run with the name of the offending operation.
///
/// A tape is confined to a single execution context. Sparse operands passed
/// to spmm are held by pointer and must outlive the tape.
class Tape {
public:
    /// Leaf holding a copy of `value` (parameters, features).
    NodeId input(Tensor value);

    /// x*w, plus row-broadcast bias when given. Bias must be 1 x cols(w).
    NodeId matmul_affine(NodeId x, NodeId w, NodeId b = kNoNode);

    /// n*h for a constant sparse operator n. The operator receives no
    /// gradient; grad(h) = n^T * g.
    NodeId spmm(const CsrMatrix* n, NodeId h);

    /// Elementwise max(0, x). Gradient is 0 at x <= 0.
    NodeId relu(NodeId x);

    /// Inverted dropout: zero with probability p, survivors scaled by
    /// 1/(1-p). Identity when not training or p == 0; rng may then be null.
    NodeId dropout(NodeId x, double p, bool training, Rng* rng);

    /// Entrywise sum of one or more same-shaped nodes.
    NodeId elementwise_sum(const std::vector<NodeId>& xs);

    /// Per-row log-softmax with max subtraction.
    NodeId log_softmax_rows(NodeId x);

    /// -(1/|mask|) * sum over masked rows i of logp[i, labels[i]].
    /// labels has one class id per row; mask lists row ids.
    NodeId masked_nll(NodeId logp, const std::vector<int32_t>& labels,
                      const std::vector<int32_t>& mask);

    /// Reverse sweep from a 1x1 root. Gradients of all ancestors are
    /// accumulated; nodes the root does not depend on keep zero gradient.
    void backward(NodeId root);

    const Tensor& value(NodeId id) const;

    /// Gradient of the last backward() root w.r.t. node `id`; zeros if the
    /// node was not reached.
    Tensor grad(NodeId id) const;

    /// Smallest |entry| ever fed into a relu on this tape; infinity when no
    /// relu was recorded. Finite-difference checks use this to keep their
    /// test points away from the kink.
    double min_abs_relu_input() const;

    int64_t size() const { return static_cast<int64_t>(nodes_.size()); }

private:
    enum class OpKind : uint8_t {
        Input,
        MatmulAffine,
        Spmm,
        Relu,
        Dropout,
        Sum,
        LogSoftmaxRows,
        MaskedNll,
    };

    struct Node {
        OpKind kind;
        std::vector<NodeId> inputs;
        Tensor value;
        const CsrMatrix* csr = nullptr;   // Spmm
        std::vector<uint8_t> keep;        // Dropout; empty = identity
        double keep_scale = 1.0;          // Dropout
        std::vector<int32_t> labels;      // MaskedNll
        std::vector<int32_t> mask;        // MaskedNll
    };

    NodeId push(Node node, const char* op_name);
    const Node& at(NodeId id) const;
    Tensor& grad_slot(NodeId id);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

} // namespace mpgcn
