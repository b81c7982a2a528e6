#include "vqacl/adam.hpp"

#include <cmath>

namespace vqacl {

AdamState AdamState::init(const ParamStore& params, const AdamConfig& config) {
    AdamState s;
    s.config = config;
    for (const auto& [name, t] : params.entries) {
        Tensor zero = t;
        std::fill(zero.data.begin(), zero.data.end(), 0.0);
        zero.requires_grad = false;
        s.first_moment.emplace(name, zero);
        s.second_moment.emplace(name, std::move(zero));
    }
    return s;
}

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state) {
    state.step_count += 1;
    const AdamConfig& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));

    for (auto& [name, theta] : params.entries) {
        Tensor& m = state.first_moment.at(name);
        Tensor& v = state.second_moment.at(name);
        const Tensor* g = grads.contains(name) ? &grads.at(name) : nullptr;
        if (g && !g->same_shape(theta))
            throw ShapeError("adam_step: gradient shape " + g->shape_str() +
                             " does not match parameter " + name + " " + theta.shape_str());
        for (int i = 0; i < theta.numel(); ++i) {
            const double gi = g ? (*g)[i] : 0.0;
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
}

}  // namespace vqacl
