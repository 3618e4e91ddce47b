#include "mpgcn/params_util.hpp"

namespace mpgcn {

std::vector<Tensor*> param_tensors(Parameters& p) {
    std::vector<Tensor*> out;
    for (auto& layer : p.conv) {
        out.push_back(&layer.weight);
        if (layer.bias) out.push_back(&*layer.bias);
    }
    out.push_back(&p.final_weight);
    if (p.final_bias) out.push_back(&*p.final_bias);
    return out;
}

std::vector<const Tensor*> param_tensors(const Parameters& p) {
    std::vector<const Tensor*> out;
    for (const auto& layer : p.conv) {
        out.push_back(&layer.weight);
        if (layer.bias) out.push_back(&*layer.bias);
    }
    out.push_back(&p.final_weight);
    if (p.final_bias) out.push_back(&*p.final_bias);
    return out;
}

ParamLayout param_layout(const Parameters& p) {
    ParamLayout layout;
    for (const auto& layer : p.conv) {
        layout.names.push_back(layer.role.describe() + ".weight");
        layout.is_bias.push_back(false);
        if (layer.bias) {
            layout.names.push_back(layer.role.describe() + ".bias");
            layout.is_bias.push_back(true);
        }
    }
    layout.names.push_back("final.weight");
    layout.is_bias.push_back(false);
    if (p.final_bias) {
        layout.names.push_back("final.bias");
        layout.is_bias.push_back(true);
    }
    return layout;
}

int64_t total_entries(const Parameters& p) {
    int64_t n = 0;
    for (const Tensor* t : param_tensors(p)) n += t->size();
    return n;
}

} // namespace mpgcn
