#pragma once

#include <string>
#include <vector>

#include "mpgcn/model.hpp"

namespace mpgcn {

/// Flat traversal order of the trainable tensors: every conv layer's
/// weight then bias, then the final linear weight and bias.
std::vector<Tensor*> param_tensors(Parameters& p);
std::vector<const Tensor*> param_tensors(const Parameters& p);

struct ParamLayout {
    std::vector<std::string> names; // aligned with param_tensors order
    std::vector<bool> is_bias;
};

ParamLayout param_layout(const Parameters& p);

int64_t total_entries(const Parameters& p);

} // namespace mpgcn
