#include "vqacl/ewc.hpp"

namespace vqacl {

void EwcState::validate() const {
    if (lambda < 0) throw Error("ewc: lambda must be >= 0");
    if (fisher.size() != anchor.entries.size())
        throw Error("ewc: fisher and anchor key sets differ");
    for (const auto& [name, f] : fisher) {
        const auto it = anchor.entries.find(name);
        if (it == anchor.entries.end()) throw Error("ewc: fisher key missing in anchor: " + name);
        if (!f.same_shape(it->second))
            throw ShapeError("ewc: fisher shape mismatch for " + name);
        for (double v : f.data)
            if (v < 0) throw Error("ewc: negative fisher entry for " + name);
    }
}

ad::NodeId ewc_loss(ad::Tape& tape, ad::NodeId base_loss, const BoundParams& bound,
                    const ModelConfig& config, const EwcState& state) {
    (void)config;
    if (state.lambda == 0.0) return base_loss;

    ad::NodeId total = tape.leaf(Tensor::scalar(0.0));
    for (const auto& [name, id] : bound.by_name) {
        const Tensor& anchor = state.anchor.at(name);
        const Tensor& fisher = state.fisher.at(name);

        Tensor neg_anchor = anchor;
        for (double& v : neg_anchor.data) v = -v;
        neg_anchor.requires_grad = false;
        Tensor fisher_const = fisher;
        fisher_const.requires_grad = false;

        const ad::NodeId diff = tape.add(id, tape.leaf(std::move(neg_anchor)));
        const ad::NodeId weighted = tape.mul(tape.mul(diff, diff), tape.leaf(std::move(fisher_const)));
        total = tape.add(total, tape.sum(weighted));
    }
    const ad::NodeId scaled = tape.mul(total, tape.leaf(Tensor::scalar(state.lambda / 2.0)));
    return tape.add(base_loss, scaled);
}

double ewc_penalty_value(const ParamStore& params, const EwcState& state) {
    double total = 0.0;
    for (const auto& [name, theta] : params.entries) {
        const Tensor& anchor = state.anchor.at(name);
        const Tensor& fisher = state.fisher.at(name);
        for (int i = 0; i < theta.numel(); ++i) {
            const double d = theta[i] - anchor[i];
            total += fisher[i] * d * d;
        }
    }
    return state.lambda / 2.0 * total;
}

}  // namespace vqacl
