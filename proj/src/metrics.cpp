#include "vqacl/metrics.hpp"

#include <sstream>

#include "vqacl/rng.hpp"

namespace vqacl {

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
        for (std::int64_t c : row) t += c;
    return t;
}

std::int64_t ConfusionMatrix::row_sum(int gold) const {
    std::int64_t t = 0;
    for (std::int64_t c : counts[static_cast<std::size_t>(gold)]) t += c;
    return t;
}

double ConfusionMatrix::accuracy() const {
    const std::int64_t n = total();
    if (n == 0) return 0.0;
    std::int64_t diag = 0;
    for (int i = 0; i < kLabelCount; ++i)
        diag += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    return static_cast<double>(diag) / static_cast<double>(n);
}

std::string ConfusionMatrix::to_csv() const {
    std::ostringstream out;
    out << "gold";
    for (int c = 0; c < kLabelCount; ++c) out << "," << label_name(c);
    out << "\n";
    for (int r = 0; r < kLabelCount; ++r) {
        out << label_name(r);
        for (int c = 0; c < kLabelCount; ++c)
            out << "," << counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        out << "\n";
    }
    return out.str();
}

ConfusionMatrix ConfusionMatrix::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error("confusion csv: missing header");
    ConfusionMatrix m;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= kLabelCount) throw Error("confusion csv: too many rows");
        std::istringstream cells(line);
        std::string cell;
        if (!std::getline(cells, cell, ',')) throw Error("confusion csv: bad row");
        if (cell != label_name(row)) throw Error("confusion csv: unexpected row label " + cell);
        for (int c = 0; c < kLabelCount; ++c) {
            if (!std::getline(cells, cell, ',')) throw Error("confusion csv: short row");
            m.counts[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)] =
                std::stoll(cell);
        }
        ++row;
    }
    if (row != kLabelCount) throw Error("confusion csv: expected 17 gold rows");
    return m;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& golds) {
    if (predictions.size() != golds.size())
        throw Error("confusion_matrix: prediction/gold length mismatch");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const int g = golds[i];
        const int p = predictions[i];
        if (g < 0 || g >= kLabelCount || p < 0 || p >= kLabelCount)
            throw Error("confusion_matrix: label outside the single-head space");
        m.counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)] += 1;
    }
    return m;
}

std::array<Task, kLabelCount> default_label_types() {
    std::array<Task, kLabelCount> types{};
    for (int i = 0; i < kLabelCount; ++i) types[static_cast<std::size_t>(i)] = task_of_label(i);
    return types;
}

double cross_type_error_rate(const ConfusionMatrix& matrix,
                             const std::array<Task, kLabelCount>& label_types) {
    const std::int64_t n = matrix.total();
    if (n == 0) return 0.0;
    std::int64_t crossed = 0;
    for (int g = 0; g < kLabelCount; ++g) {
        for (int p = 0; p < kLabelCount; ++p) {
            if (label_types[static_cast<std::size_t>(g)] != label_types[static_cast<std::size_t>(p)])
                crossed += matrix.counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
        }
    }
    return static_cast<double>(crossed) / static_cast<double>(n);
}

std::vector<double> answer_distribution(const std::vector<Question>& questions) {
    if (questions.empty()) throw Error("answer_distribution: empty question list");
    std::vector<double> dist(kLabelCount, 0.0);
    for (const Question& q : questions) dist[static_cast<std::size_t>(q.answer)] += 1.0;
    for (double& v : dist) v /= static_cast<double>(questions.size());
    return dist;
}

BaselineResult stratified_random_baseline(const std::vector<double>& draw_dist,
                                          const std::vector<int>& eval_golds, std::uint64_t seed,
                                          int trials) {
    if (draw_dist.empty()) throw Error("stratified_random_baseline: empty draw distribution");
    if (eval_golds.empty()) throw Error("stratified_random_baseline: empty gold list");
    double mass = 0.0;
    for (double v : draw_dist) {
        if (v < 0) throw Error("stratified_random_baseline: negative probability");
        mass += v;
    }
    if (std::abs(mass - 1.0) > 1e-9)
        throw Error("stratified_random_baseline: draw distribution does not sum to 1");

    std::vector<double> gold_freq(draw_dist.size(), 0.0);
    for (int g : eval_golds) {
        if (g < 0 || g >= static_cast<int>(draw_dist.size()))
            throw Error("stratified_random_baseline: gold label outside distribution support");
        gold_freq[static_cast<std::size_t>(g)] += 1.0;
    }
    for (double& v : gold_freq) v /= static_cast<double>(eval_golds.size());

    BaselineResult result;
    for (std::size_t c = 0; c < draw_dist.size(); ++c) result.analytic += gold_freq[c] * draw_dist[c];

    RngStream rng(seed, "random-baseline");
    std::int64_t hits = 0;
    for (int t = 0; t < trials; ++t) {
        const int gold =
            eval_golds[static_cast<std::size_t>(rng.uniform_int(
                static_cast<std::int64_t>(eval_golds.size())))];
        // inverse-CDF draw from draw_dist
        const double u = rng.uniform();
        double cum = 0.0;
        int drawn = static_cast<int>(draw_dist.size()) - 1;
        for (std::size_t c = 0; c < draw_dist.size(); ++c) {
            cum += draw_dist[c];
            if (u < cum) {
                drawn = static_cast<int>(c);
                break;
            }
        }
        if (drawn == gold) ++hits;
    }
    result.monte_carlo = trials > 0 ? static_cast<double>(hits) / trials : 0.0;
    return result;
}

double cl_score(double acc_first, double acc_second) {
    if (acc_first < 0 || acc_first > 1 || acc_second < 0 || acc_second > 1)
        throw Error("cl_score: accuracies must lie in [0,1]");
    return (acc_first + acc_second) / 2.0;
}

}  // namespace vqacl
