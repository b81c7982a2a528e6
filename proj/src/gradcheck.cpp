#include "vqacl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vqacl/rng.hpp"

namespace vqacl {

GradCheckResult grad_check(const LossFn& loss_fn, const ParamStore& params, double epsilon,
                           int coords_per_param, std::uint64_t seed) {
    GradMap analytic;
    const double base_loss = loss_fn(params, &analytic);
    if (!std::isfinite(base_loss)) throw Error("grad_check: loss is not finite");

    RngStream rng(seed, "grad-check");
    GradCheckResult result;
    ParamStore work = params;

    for (const auto& [name, tensor] : params.entries) {
        const int n = tensor.numel();
        const int k = std::min(coords_per_param, n);
        std::vector<int> coords;
        if (k == n) {
            coords.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
        } else {
            coords = rng.sample_without_replacement(n, k);
        }

        Tensor& wt = work.at(name);
        for (int c : coords) {
            const double original = wt[c];
            wt[c] = original + epsilon;
            const double plus = loss_fn(work, nullptr);
            wt[c] = original - epsilon;
            const double minus = loss_fn(work, nullptr);
            wt[c] = original;
            if (!std::isfinite(plus) || !std::isfinite(minus))
                throw Error("grad_check: perturbed loss is not finite for " + name);

            const double fd = (plus - minus) / (2.0 * epsilon);
            const double an = analytic.contains(name) ? analytic.at(name)[c] : 0.0;
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
            ++result.coords_checked;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = name;
                result.worst_index = c;
                result.analytic = an;
                result.numeric = fd;
            }
        }
    }
    return result;
}

}  // namespace vqacl
