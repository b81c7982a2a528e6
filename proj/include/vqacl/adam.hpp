#pragma once

#include <cstdint>
#include <map>

#include "vqacl/autodiff.hpp"
#include "vqacl/params.hpp"

namespace vqacl {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::map<std::string, Tensor> first_moment;
    std::map<std::string, Tensor> second_moment;
    std::int64_t step_count = 0;

    static AdamState init(const ParamStore& params, const AdamConfig& config);
};

// Standard Adam with bias correction. A parameter missing from `grads` is
// treated as having a zero gradient (its moments still decay).
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state);

}  // namespace vqacl
