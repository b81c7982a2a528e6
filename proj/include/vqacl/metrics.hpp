#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vqacl/dataset.hpp"
#include "vqacl/fp.hpp"

namespace vqacl {

// 17x17 counts over the single-head label space, rows = gold, cols = predicted.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kLabelCount>, kLabelCount> counts{};

    std::int64_t total() const;
    std::int64_t row_sum(int gold) const;
    double accuracy() const;  // diagonal mass / total
    std::string to_csv() const;
    static ConfusionMatrix from_csv(const std::string& text);
};

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& golds);

// Fraction of examples whose predicted label's task type differs from the
// gold label's type. `label_types` defaults to the built-in 15-Wh/2-Yn split.
std::array<Task, kLabelCount> default_label_types();
double cross_type_error_rate(const ConfusionMatrix& matrix,
                             const std::array<Task, kLabelCount>& label_types =
                                 default_label_types());

// Answer frequencies over the 17 labels for a question list.
std::vector<double> answer_distribution(const std::vector<Question>& questions);

struct BaselineResult {
    double analytic = 0.0;     // sum_c p_c q_c
    double monte_carlo = 0.0;  // over `trials` independent (gold, draw) pairs
};

// Stratified random baseline: predictions drawn from `draw_dist`, scored
// against golds distributed like `eval_golds`.
BaselineResult stratified_random_baseline(const std::vector<double>& draw_dist,
                                          const std::vector<int>& eval_golds, std::uint64_t seed,
                                          int trials);

// Selection metric over one task pair: unweighted mean of the two accuracies.
double cl_score(double acc_first, double acc_second);

}  // namespace vqacl
