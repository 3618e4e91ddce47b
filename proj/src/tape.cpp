#include "mpgcn/tape.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpgcn {

namespace {

void matmul_into(const Tensor& x, const Tensor& w, Tensor& out) {
    // out(i,j) += sum_k x(i,k) * w(k,j); ikj order streams rows of w.
    for (int64_t i = 0; i < x.rows; ++i) {
        double* out_row = &out.data[static_cast<size_t>(i * out.cols)];
        for (int64_t k = 0; k < x.cols; ++k) {
            const double xv = x(i, k);
            if (xv == 0.0) continue;
            const double* w_row = &w.data[static_cast<size_t>(k * w.cols)];
            for (int64_t j = 0; j < w.cols; ++j) out_row[j] += xv * w_row[j];
        }
    }
}

} // namespace

NodeId Tape::push(Node node, const char* op_name) {
    if (!all_finite(node.value))
        throw std::runtime_error(std::string(op_name) + " produced a non-finite value");
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::at(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
        throw std::invalid_argument("tape: node id " + std::to_string(id) + " out of range");
    return nodes_[static_cast<size_t>(id)];
}

NodeId Tape::input(Tensor value) {
    Node n;
    n.kind = OpKind::Input;
    n.value = std::move(value);
    return push(std::move(n), "input");
}

NodeId Tape::matmul_affine(NodeId x, NodeId w, NodeId b) {
    const Tensor& xv = at(x).value;
    const Tensor& wv = at(w).value;
    if (xv.cols != wv.rows)
        throw std::invalid_argument("matmul_affine: shape mismatch " + xv.shape_str() + " * " + wv.shape_str());

    Node n;
    n.kind = OpKind::MatmulAffine;
    n.inputs = {x, w};
    n.value = Tensor(xv.rows, wv.cols);
    matmul_into(xv, wv, n.value);

    if (b != kNoNode) {
        const Tensor& bv = at(b).value;
        if (bv.rows != 1 || bv.cols != wv.cols)
            throw std::invalid_argument("matmul_affine: bias is " + bv.shape_str() + ", expected 1x" +
                                        std::to_string(wv.cols));
        n.inputs.push_back(b);
        for (int64_t i = 0; i < n.value.rows; ++i)
            for (int64_t j = 0; j < n.value.cols; ++j) n.value(i, j) += bv(0, j);
    }
    return push(std::move(n), "matmul_affine");
}

NodeId Tape::spmm(const CsrMatrix* a, NodeId h) {
    if (a == nullptr) throw std::invalid_argument("spmm: null sparse operand");
    Node n;
    n.kind = OpKind::Spmm;
    n.inputs = {h};
    n.csr = a;
    n.value = mpgcn::spmm(*a, at(h).value);
    return push(std::move(n), "spmm");
}

NodeId Tape::relu(NodeId x) {
    Node n;
    n.kind = OpKind::Relu;
    n.inputs = {x};
    n.value = at(x).value;
    for (auto& v : n.value.data) v = v > 0.0 ? v : 0.0;
    return push(std::move(n), "relu");
}

NodeId Tape::dropout(NodeId x, double p, bool training, Rng* rng) {
    if (p < 0.0 || p >= 1.0)
        throw std::invalid_argument("dropout: p = " + std::to_string(p) + " outside [0, 1)");

    Node n;
    n.kind = OpKind::Dropout;
    n.inputs = {x};
    n.value = at(x).value;
    if (training && p > 0.0) {
        if (rng == nullptr) throw std::invalid_argument("dropout: rng required in training mode");
        n.keep.resize(n.value.data.size());
        n.keep_scale = 1.0 / (1.0 - p);
        for (size_t i = 0; i < n.value.data.size(); ++i) {
            const bool keep = rng->uniform01() >= p;
            n.keep[i] = keep ? 1 : 0;
            n.value.data[i] = keep ? n.value.data[i] * n.keep_scale : 0.0;
        }
    }
    return push(std::move(n), "dropout");
}

NodeId Tape::elementwise_sum(const std::vector<NodeId>& xs) {
    if (xs.empty()) throw std::invalid_argument("elementwise_sum: empty input sequence");
    Node n;
    n.kind = OpKind::Sum;
    n.inputs = xs;
    n.value = at(xs[0]).value;
    for (size_t i = 1; i < xs.size(); ++i) {
        const Tensor& v = at(xs[i]).value;
        if (!v.same_shape(n.value))
            throw std::invalid_argument("elementwise_sum: shape mismatch " + n.value.shape_str() +
                                        " vs " + v.shape_str());
        for (size_t k = 0; k < v.data.size(); ++k) n.value.data[k] += v.data[k];
    }
    return push(std::move(n), "elementwise_sum");
}

NodeId Tape::log_softmax_rows(NodeId x) {
    const Tensor& xv = at(x).value;
    if (xv.cols < 1) throw std::invalid_argument("log_softmax_rows: zero columns");

    Node n;
    n.kind = OpKind::LogSoftmaxRows;
    n.inputs = {x};
    n.value = Tensor(xv.rows, xv.cols);
    for (int64_t i = 0; i < xv.rows; ++i) {
        double m = xv(i, 0);
        for (int64_t j = 1; j < xv.cols; ++j) m = std::max(m, xv(i, j));
        double s = 0.0;
        for (int64_t j = 0; j < xv.cols; ++j) s += std::exp(xv(i, j) - m);
        const double lse = m + std::log(s);
        for (int64_t j = 0; j < xv.cols; ++j) n.value(i, j) = xv(i, j) - lse;
    }
    return push(std::move(n), "log_softmax_rows");
}

NodeId Tape::masked_nll(NodeId logp, const std::vector<int32_t>& labels,
                        const std::vector<int32_t>& mask) {
    const Tensor& lp = at(logp).value;
    if (mask.empty()) throw std::invalid_argument("masked_nll: empty mask");
    if (static_cast<int64_t>(labels.size()) != lp.rows)
        throw std::invalid_argument("masked_nll: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(lp.rows) + " rows");

    double acc = 0.0;
    for (int32_t i : mask) {
        if (i < 0 || i >= lp.rows)
            throw std::invalid_argument("masked_nll: masked row " + std::to_string(i) + " out of range");
        const int32_t y = labels[static_cast<size_t>(i)];
        if (y < 0 || y >= lp.cols)
            throw std::invalid_argument("masked_nll: label " + std::to_string(y) + " at row " +
                                        std::to_string(i) + " outside [0," + std::to_string(lp.cols) + ")");
        acc += lp(i, y);
    }

    Node n;
    n.kind = OpKind::MaskedNll;
    n.inputs = {logp};
    n.labels = labels;
    n.mask = mask;
    n.value = Tensor(1, 1);
    n.value(0, 0) = -acc / static_cast<double>(mask.size());
    return push(std::move(n), "masked_nll");
}

Tensor& Tape::grad_slot(NodeId id) {
    Tensor& g = grads_[static_cast<size_t>(id)];
    if (g.empty() && at(id).value.size() > 0) g = Tensor(at(id).value.rows, at(id).value.cols);
    return g;
}

void Tape::backward(NodeId root) {
    const Node& r = at(root);
    if (r.value.rows != 1 || r.value.cols != 1)
        throw std::invalid_argument("backward: root node is " + r.value.shape_str() + ", expected a scalar");

    grads_.assign(nodes_.size(), Tensor());
    grad_slot(root)(0, 0) = 1.0;

    for (NodeId id = root; id >= 0; --id) {
        const Node& node = nodes_[static_cast<size_t>(id)];
        const Tensor& g = grads_[static_cast<size_t>(id)];
        if (g.empty()) continue; // root does not depend on this node

        switch (node.kind) {
        case OpKind::Input:
            break;
        case OpKind::MatmulAffine: {
            const Tensor& xv = at(node.inputs[0]).value;
            const Tensor& wv = at(node.inputs[1]).value;
            Tensor& gx = grad_slot(node.inputs[0]);
            for (int64_t i = 0; i < xv.rows; ++i)
                for (int64_t k = 0; k < xv.cols; ++k) {
                    double acc = 0.0;
                    for (int64_t j = 0; j < wv.cols; ++j) acc += g(i, j) * wv(k, j);
                    gx(i, k) += acc;
                }
            Tensor& gw = grad_slot(node.inputs[1]);
            for (int64_t i = 0; i < xv.rows; ++i) {
                const double* g_row = &g.data[static_cast<size_t>(i * g.cols)];
                for (int64_t k = 0; k < xv.cols; ++k) {
                    const double xik = xv(i, k);
                    if (xik == 0.0) continue;
                    double* gw_row = &gw.data[static_cast<size_t>(k * gw.cols)];
                    for (int64_t j = 0; j < wv.cols; ++j) gw_row[j] += xik * g_row[j];
                }
            }
            if (node.inputs.size() == 3) {
                Tensor& gb = grad_slot(node.inputs[2]);
                for (int64_t j = 0; j < wv.cols; ++j) {
                    double acc = 0.0;
                    for (int64_t i = 0; i < xv.rows; ++i) acc += g(i, j);
                    gb(0, j) += acc;
                }
            }
            break;
        }
        case OpKind::Spmm: {
            // grad(h) = n^T * g, accumulated in stored-entry order.
            Tensor& gh = grad_slot(node.inputs[0]);
            const CsrMatrix& a = *node.csr;
            for (int64_t i = 0; i < a.num_rows; ++i) {
                const double* g_row = &g.data[static_cast<size_t>(i * g.cols)];
                for (int64_t k = a.row_offsets[static_cast<size_t>(i)]; k < a.row_offsets[static_cast<size_t>(i) + 1]; ++k) {
                    const double v = a.values[static_cast<size_t>(k)];
                    double* gh_row = &gh.data[static_cast<size_t>(a.col_indices[static_cast<size_t>(k)] * gh.cols)];
                    for (int64_t j = 0; j < g.cols; ++j) gh_row[j] += v * g_row[j];
                }
            }
            break;
        }
        case OpKind::Relu: {
            const Tensor& xv = at(node.inputs[0]).value;
            Tensor& gx = grad_slot(node.inputs[0]);
            for (size_t k = 0; k < xv.data.size(); ++k)
                if (xv.data[k] > 0.0) gx.data[k] += g.data[k];
            break;
        }
        case OpKind::Dropout: {
            Tensor& gx = grad_slot(node.inputs[0]);
            if (node.keep.empty()) {
                for (size_t k = 0; k < g.data.size(); ++k) gx.data[k] += g.data[k];
            } else {
                for (size_t k = 0; k < g.data.size(); ++k)
                    if (node.keep[k]) gx.data[k] += g.data[k] * node.keep_scale;
            }
            break;
        }
        case OpKind::Sum: {
            for (NodeId in : node.inputs) {
                Tensor& gi = grad_slot(in);
                for (size_t k = 0; k < g.data.size(); ++k) gi.data[k] += g.data[k];
            }
            break;
        }
        case OpKind::LogSoftmaxRows: {
            Tensor& gx = grad_slot(node.inputs[0]);
            for (int64_t i = 0; i < g.rows; ++i) {
                double row_sum = 0.0;
                for (int64_t j = 0; j < g.cols; ++j) row_sum += g(i, j);
                for (int64_t j = 0; j < g.cols; ++j)
                    gx(i, j) += g(i, j) - std::exp(node.value(i, j)) * row_sum;
            }
            break;
        }
        case OpKind::MaskedNll: {
            Tensor& gl = grad_slot(node.inputs[0]);
            const double scale = g(0, 0) / static_cast<double>(node.mask.size());
            for (int32_t i : node.mask) gl(i, node.labels[static_cast<size_t>(i)]) -= scale;
            break;
        }
        }
    }
}

const Tensor& Tape::value(NodeId id) const { return at(id).value; }

double Tape::min_abs_relu_input() const {
    double margin = std::numeric_limits<double>::infinity();
    for (const Node& node : nodes_) {
        if (node.kind != OpKind::Relu) continue;
        for (double v : nodes_[static_cast<size_t>(node.inputs[0])].value.data)
            margin = std::min(margin, std::abs(v));
    }
    return margin;
}

Tensor Tape::grad(NodeId id) const {
    const Node& node = at(id);
    if (grads_.size() == nodes_.size()) {
        const Tensor& g = grads_[static_cast<size_t>(id)];
        if (!g.empty()) return g;
    }
    return Tensor(node.value.rows, node.value.cols);
}

} // namespace mpgcn
