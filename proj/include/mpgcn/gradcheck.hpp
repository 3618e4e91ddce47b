#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mpgcn/model.hpp"

namespace mpgcn {

struct GradCheckReport {
    double max_rel_err = 0.0;
    int64_t entries_checked = 0;
};

/// Central-difference check of `analytic_grads` against `loss_fn` around
/// `at`. Every parameter entry is checked unless the total exceeds
/// `budget`, in which case a seeded random subsample of `budget` entries
/// is used. Relative error is |a - n| / max(1e-8, |a| + |n|).
GradCheckReport check_gradients(const std::function<double(const Parameters&)>& loss_fn,
                                const Parameters& at, const Parameters& analytic_grads,
                                double eps = 1e-5, int64_t budget = 256,
                                uint64_t sample_seed = 0);

/// Forward + masked NLL + backward for a full model; convenience wrapper
/// producing both the loss and the tape gradients at `params`. When
/// `relu_margin_out` is given it receives the smallest |pre-activation|
/// seen by any relu (finite differences need that distance).
double model_loss_and_grads(const ModelSpec& spec, const Parameters& params,
                            const CsrMatrix& prop, const Tensor& features,
                            const std::vector<int32_t>& labels,
                            const std::vector<int32_t>& train_ids,
                            Parameters* grads_out, double* relu_margin_out = nullptr);

/// check_gradients applied to a freshly initialized model.
GradCheckReport check_model_gradients(const ModelSpec& spec, const CsrMatrix& prop,
                                      const Tensor& features, const std::vector<int32_t>& labels,
                                      const std::vector<int32_t>& train_ids, uint64_t seed,
                                      double eps = 1e-5);

struct GradCheckCase {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// The verification suite behind the `gradcheck` subcommand: one finite-
/// difference case per tape operation plus full three-architecture models
/// on a small synthetic graph.
std::vector<GradCheckCase> run_gradcheck_suite(uint64_t seed = 1);

} // namespace mpgcn
