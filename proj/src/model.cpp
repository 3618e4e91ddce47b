#include "mpgcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpgcn {

void validate_spec(const ModelSpec& spec) {
    if (spec.in_dim < 1) throw std::invalid_argument("model spec: in_dim must be >= 1");
    if (spec.hidden < 1) throw std::invalid_argument("model spec: hidden must be >= 1");
    if (spec.classes < 1) throw std::invalid_argument("model spec: classes must be >= 1");
    if (spec.dropout < 0.0 || spec.dropout >= 1.0)
        throw std::invalid_argument("model spec: dropout must lie in [0, 1)");

    if (spec.kind == ArchKind::Multipath) {
        if (spec.paths.empty())
            throw std::invalid_argument("model spec: multipath requires at least one path");
        if (spec.shared_stem < 0)
            throw std::invalid_argument("model spec: shared_stem must be >= 0");
        for (size_t i = 0; i < spec.paths.size(); ++i) {
            const int64_t floor = std::max<int64_t>(1, spec.shared_stem);
            if (spec.paths[i] < floor)
                throw std::invalid_argument("model spec: path " + std::to_string(i) + " depth " +
                                            std::to_string(spec.paths[i]) + " is below max(1, shared_stem=" +
                                            std::to_string(spec.shared_stem) + ")");
        }
    } else {
        if (spec.depth < 1) throw std::invalid_argument("model spec: depth must be >= 1");
    }
}

std::string LayerRole::describe() const {
    switch (kind) {
    case Kind::Sequential: return "conv[" + std::to_string(position) + "]";
    case Kind::Stem: return "stem[" + std::to_string(position) + "]";
    case Kind::Path: return "path" + std::to_string(path) + "[" + std::to_string(position) + "]";
    }
    return "?";
}

namespace {

// (in_dim, role) for every conv layer, in the deterministic layer order.
std::vector<std::pair<int64_t, LayerRole>> conv_layout(const ModelSpec& spec) {
    std::vector<std::pair<int64_t, LayerRole>> layout;
    const int64_t d = spec.in_dim;
    const int64_t h = spec.hidden;
    if (spec.kind != ArchKind::Multipath) {
        for (int64_t l = 0; l < spec.depth; ++l)
            layout.push_back({l == 0 ? d : h, {LayerRole::Kind::Sequential, -1, l}});
        return layout;
    }
    const int64_t s = spec.shared_stem;
    for (int64_t l = 0; l < s; ++l)
        layout.push_back({l == 0 ? d : h, {LayerRole::Kind::Stem, -1, l}});
    for (size_t p = 0; p < spec.paths.size(); ++p)
        for (int64_t l = s; l < spec.paths[p]; ++l)
            layout.push_back({l == 0 ? d : h, {LayerRole::Kind::Path, static_cast<int64_t>(p), l}});
    return layout;
}

Tensor glorot(int64_t fan_in, int64_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w(fan_in, fan_out);
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
    return w;
}

} // namespace

Parameters init_params(const ModelSpec& spec, uint64_t seed) {
    validate_spec(spec);
    Rng rng = substream(seed, "init");

    Parameters params;
    for (const auto& [fan_in, role] : conv_layout(spec)) {
        ConvLayer layer;
        layer.weight = glorot(fan_in, spec.hidden, rng);
        if (spec.bias) layer.bias = Tensor(1, spec.hidden);
        layer.role = role;
        params.conv.push_back(std::move(layer));
    }
    params.final_weight = glorot(spec.hidden, spec.classes, rng);
    if (spec.bias) params.final_bias = Tensor(1, spec.classes);
    return params;
}

ParamCount param_count(const ModelSpec& spec) {
    validate_spec(spec);
    const int64_t b = spec.bias ? 1 : 0;
    ParamCount count;
    for (const auto& [fan_in, role] : conv_layout(spec))
        count.conv += fan_in * spec.hidden + b * spec.hidden;
    count.final_linear = spec.hidden * spec.classes + b * spec.classes;
    count.total = count.conv + count.final_linear;
    return count;
}

namespace {

struct Builder {
    Tape& tape;
    const ModelSpec& spec;
    const CsrMatrix* prop;
    Mode mode;
    Rng* rng;
    ForwardResult result;
    size_t next_layer = 0;

    // dropout -> propagate -> affine, consuming conv layers in order.
    NodeId conv(NodeId h) {
        const ConvLayer& layer = layer_at(next_layer++);
        NodeId w = tape.input(layer.weight);
        NodeId b = kNoNode;
        if (layer.bias) b = tape.input(*layer.bias);
        result.conv_weights.push_back(w);
        result.conv_biases.push_back(b);

        NodeId x = tape.dropout(h, spec.dropout, mode == Mode::Training, rng);
        NodeId agg = tape.spmm(prop, x);
        return tape.matmul_affine(agg, w, b);
    }

    NodeId head(NodeId h) {
        NodeId w = tape.input(params->final_weight);
        NodeId b = kNoNode;
        if (params->final_bias) b = tape.input(*params->final_bias);
        result.final_weight = w;
        result.final_bias = b;
        return tape.log_softmax_rows(tape.matmul_affine(h, w, b));
    }

    const Parameters* params = nullptr;
    const ConvLayer& layer_at(size_t i) const {
        if (i >= params->conv.size())
            throw std::invalid_argument("forward: parameters hold " + std::to_string(params->conv.size()) +
                                        " conv layers, spec needs more");
        return params->conv[i];
    }
};

Builder make_builder(Tape& tape, const ModelSpec& spec, const Parameters& params,
                     const CsrMatrix& prop, const Tensor& features, Mode mode, Rng* rng) {
    validate_spec(spec);
    if (prop.num_rows != prop.num_cols || prop.num_rows != features.rows)
        throw std::invalid_argument("forward: propagation operator is " + std::to_string(prop.num_rows) +
                                    "x" + std::to_string(prop.num_cols) + " for " +
                                    std::to_string(features.rows) + " feature rows");
    if (features.cols != spec.in_dim)
        throw std::invalid_argument("forward: features have " + std::to_string(features.cols) +
                                    " columns, spec.in_dim is " + std::to_string(spec.in_dim));
    if (mode == Mode::Training && spec.dropout > 0.0 && rng == nullptr)
        throw std::invalid_argument("forward: training mode with dropout needs an rng");

    Builder b{tape, spec, &prop, mode, rng, {}, 0};
    b.params = &params;
    b.result.features = tape.input(features);
    return b;
}

} // namespace

ForwardResult forward_sequential(Tape& tape, const ModelSpec& spec, const Parameters& params,
                                 const CsrMatrix& prop, const Tensor& features, Mode mode,
                                 Rng* dropout_rng) {
    if (spec.kind != ArchKind::Sequential)
        throw std::invalid_argument("forward_sequential: spec kind mismatch");
    Builder b = make_builder(tape, spec, params, prop, features, mode, dropout_rng);
    NodeId h = b.result.features;
    for (int64_t l = 0; l < spec.depth; ++l) h = tape.relu(b.conv(h));
    b.result.logits = b.head(h);
    return b.result;
}

ForwardResult forward_residual(Tape& tape, const ModelSpec& spec, const Parameters& params,
                               const CsrMatrix& prop, const Tensor& features, Mode mode,
                               Rng* dropout_rng) {
    if (spec.kind != ArchKind::Residual)
        throw std::invalid_argument("forward_residual: spec kind mismatch");
    Builder b = make_builder(tape, spec, params, prop, features, mode, dropout_rng);
    NodeId h = tape.relu(b.conv(b.result.features)); // d->h layer carries no skip
    for (int64_t l = 1; l < spec.depth; ++l)
        h = tape.elementwise_sum({tape.relu(b.conv(h)), h});
    b.result.logits = b.head(h);
    return b.result;
}

ForwardResult forward_multipath(Tape& tape, const ModelSpec& spec, const Parameters& params,
                                const CsrMatrix& prop, const Tensor& features, Mode mode,
                                Rng* dropout_rng) {
    if (spec.kind != ArchKind::Multipath)
        throw std::invalid_argument("forward_multipath: spec kind mismatch");
    Builder b = make_builder(tape, spec, params, prop, features, mode, dropout_rng);

    NodeId stem = b.result.features;
    for (int64_t l = 0; l < spec.shared_stem; ++l) stem = tape.relu(b.conv(stem));

    std::vector<NodeId> outputs;
    for (int64_t depth : spec.paths) {
        NodeId h = stem;
        for (int64_t l = spec.shared_stem; l < depth; ++l) h = tape.relu(b.conv(h));
        outputs.push_back(h);
    }
    b.result.logits = b.head(tape.elementwise_sum(outputs));
    return b.result;
}

ForwardResult forward_model(Tape& tape, const ModelSpec& spec, const Parameters& params,
                            const CsrMatrix& prop, const Tensor& features, Mode mode,
                            Rng* dropout_rng) {
    switch (spec.kind) {
    case ArchKind::Sequential: return forward_sequential(tape, spec, params, prop, features, mode, dropout_rng);
    case ArchKind::Residual: return forward_residual(tape, spec, params, prop, features, mode, dropout_rng);
    case ArchKind::Multipath: return forward_multipath(tape, spec, params, prop, features, mode, dropout_rng);
    }
    throw std::invalid_argument("forward_model: unknown architecture kind");
}

} // namespace mpgcn
