#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpgcn/csr.hpp"
#include "mpgcn/tape.hpp"
#include "mpgcn/tensor.hpp"

namespace mpgcn {

enum class ArchKind { Sequential, Residual, Multipath };

/// Architecture description.
///
/// Sequential stacks `depth` convolution layers. Residual is the same
/// stack with identity skips on the hidden-to-hidden layers. Multipath
/// runs several shallow stacks in parallel: `paths[i]` counts the total
/// layers of path i INCLUDING the `shared_stem` layers computed once and
/// fed to every path, path outputs are summed, and one shared linear
/// classifier follows. paths = {3,4} with shared_stem = 1 therefore owns
/// 1 + 2 + 3 = 6 distinct layers.
struct ModelSpec {
    ArchKind kind = ArchKind::Sequential;
    int64_t in_dim = 0;
    int64_t hidden = 0;
    int64_t classes = 0;
    int64_t depth = 1;             // sequential / residual
    std::vector<int64_t> paths;    // multipath
    int64_t shared_stem = 0;       // multipath
    double dropout = 0.5;
    bool bias = true;
};

/// Throws invalid_argument naming the violated invariant.
void validate_spec(const ModelSpec& spec);

struct LayerRole {
    enum class Kind { Sequential, Stem, Path };
    Kind kind = Kind::Sequential;
    int64_t path = -1;     // Path only
    int64_t position = 0;  // index within the stack / stem / path
    std::string describe() const;
};

struct ConvLayer {
    Tensor weight;
    std::optional<Tensor> bias;
    LayerRole role;
};

/// Trainable state. Conv layers are ordered stem first, then paths in
/// declaration order (sequential stacks are just their layer order), with
/// the shared final linear layer last.
struct Parameters {
    std::vector<ConvLayer> conv;
    Tensor final_weight;
    std::optional<Tensor> final_bias;
};

/// Glorot-uniform weights (entries in +-sqrt(6/(fan_in+fan_out))), zero
/// biases. Identical seed gives bitwise identical parameters.
Parameters init_params(const ModelSpec& spec, uint64_t seed);

struct ParamCount {
    int64_t conv = 0;
    int64_t final_linear = 0;
    int64_t total = 0;
};

/// Exact closed-form count of trainable scalars.
ParamCount param_count(const ModelSpec& spec);

enum class Mode { Training, Evaluation };

/// Node ids of everything a training step needs back from the tape.
struct ForwardResult {
    NodeId logits = kNoNode;
    NodeId features = kNoNode;
    std::vector<NodeId> conv_weights;
    std::vector<NodeId> conv_biases; // kNoNode where the layer has none
    NodeId final_weight = kNoNode;
    NodeId final_bias = kNoNode;
};

/// Forward passes. `prop` is the normalized propagation operator and must
/// outlive the tape. Dropout (training mode only) draws from `dropout_rng`
/// before every convolution layer, one independent mask each.
ForwardResult forward_sequential(Tape& tape, const ModelSpec& spec, const Parameters& params,
                                 const CsrMatrix& prop, const Tensor& features, Mode mode,
                                 Rng* dropout_rng = nullptr);
ForwardResult forward_residual(Tape& tape, const ModelSpec& spec, const Parameters& params,
                               const CsrMatrix& prop, const Tensor& features, Mode mode,
                               Rng* dropout_rng = nullptr);
ForwardResult forward_multipath(Tape& tape, const ModelSpec& spec, const Parameters& params,
                                const CsrMatrix& prop, const Tensor& features, Mode mode,
                                Rng* dropout_rng = nullptr);

/// Dispatch on spec.kind.
ForwardResult forward_model(Tape& tape, const ModelSpec& spec, const Parameters& params,
                            const CsrMatrix& prop, const Tensor& features, Mode mode,
                            Rng* dropout_rng = nullptr);

} // namespace mpgcn
