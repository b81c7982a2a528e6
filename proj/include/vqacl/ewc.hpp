#pragma once

#include <map>

#include "vqacl/autodiff.hpp"
#include "vqacl/model.hpp"
#include "vqacl/params.hpp"

namespace vqacl {

// Anchor parameters from the first task, the diagonal Fisher estimate at the
// anchor, and the regularization strength.
struct EwcState {
    ParamStore anchor;
    std::map<std::string, Tensor> fisher;  // entries >= 0, shapes match anchor
    double lambda = 0.0;
    int sample_count = 0;

    void validate() const;
};

// L = base + (lambda/2) * sum_i F_i (theta_i - anchor_i)^2 on the tape, with
// anchor and F held constant. lambda == 0 returns `base` untouched, so the
// naive reduction is exact.
ad::NodeId ewc_loss(ad::Tape& tape, ad::NodeId base_loss, const BoundParams& bound,
                    const ModelConfig& config, const EwcState& state);

// Plain-number penalty for the same formula (tests and diagnostics).
double ewc_penalty_value(const ParamStore& params, const EwcState& state);

}  // namespace vqacl
