#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "vqacl/autodiff.hpp"
#include "vqacl/params.hpp"

namespace vqacl {

// Evaluates a deterministic loss for the given parameters. When `grads` is
// non-null the analytic gradients are written into it as well.
using LossFn = std::function<double(const ParamStore&, GradMap*)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    int worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    int coords_checked = 0;
};

// Central finite differences against the analytic gradient:
// (L(theta+eps) - L(theta-eps)) / 2eps per sampled coordinate.
// Checks min(coords_per_param, numel) coordinates of every parameter,
// sampled without replacement from `seed`. Relative error uses
// |a - f| / max(|a|, |f|, 1e-6).
GradCheckResult grad_check(const LossFn& loss_fn, const ParamStore& params, double epsilon,
                           int coords_per_param, std::uint64_t seed);

}  // namespace vqacl
