#include "vqacl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "vqacl/rng.hpp"

namespace vqacl {

std::vector<Example> sample_questions(const std::vector<Example>& split, int n,
                                      std::uint64_t seed) {
    if (n <= 0 || n > static_cast<int>(split.size()))
        throw Error("sample_questions: n " + std::to_string(n) + " out of range for split of " +
                    std::to_string(split.size()));

    // group indices by subtype, groups ordered by subtype name
    std::map<std::string, std::vector<int>> groups;
    for (std::size_t i = 0; i < split.size(); ++i)
        groups[split[i].question->subtype.name()].push_back(static_cast<int>(i));

    RngStream rng(seed, "question-sample");
    std::vector<Example> out;
    out.reserve(static_cast<std::size_t>(n));
    const int g = static_cast<int>(groups.size());
    int gi = 0;
    int remaining = n;
    for (auto& [_, indices] : groups) {
        const int groups_left = g - gi;
        int quota = remaining / groups_left + (remaining % groups_left > 0 ? 1 : 0);
        quota = std::min(quota, static_cast<int>(indices.size()));
        quota = std::min(quota, remaining);
        const std::vector<int> picks =
            rng.sample_without_replacement(static_cast<int>(indices.size()), quota);
        for (int p : picks) out.push_back(split[static_cast<std::size_t>(indices[static_cast<std::size_t>(p)])]);
        remaining -= quota;
        ++gi;
    }
    if (remaining > 0)
        throw Error("sample_questions: could not fill the requested sample size");

    std::sort(out.begin(), out.end(), [](const Example& a, const Example& b) {
        return a.question->qid < b.question->qid;
    });
    return out;
}

ActivationSet extract_activations(const ParamStore& params, const ModelConfig& config,
                                  const std::vector<Example>& questions) {
    const LabelSpace head = config.label_space();
    ActivationSet set;
    set.rows.reserve(questions.size());
    set.meta.reserve(questions.size());

    ad::Tape tape;
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < questions.size(); start += kChunk) {
        const std::size_t end = std::min(questions.size(), start + kChunk);
        tape.reset();
        const BoundParams bound = bind_model(tape, params, config);
        for (std::size_t i = start; i < end; ++i) {
            const Example& ex = questions[i];
            const ForwardResult fwd = forward(tape, bound, config, ex.question->tokens, *ex.scene);
            const Tensor& pen = tape.value(fwd.penultimate);
            const Tensor& logits = tape.value(fwd.logits);
            int argmax = 0;
            for (int k = 1; k < logits.numel(); ++k)
                if (logits[k] > logits[argmax]) argmax = k;

            set.rows.push_back(pen.data);
            ActivationSet::Meta meta;
            meta.qid = ex.question->qid;
            meta.task = ex.question->task;
            meta.subtype = ex.question->subtype;
            meta.gold = ex.question->answer;
            meta.predicted = head.to_single(argmax);
            set.meta.push_back(meta);
        }
    }
    return set;
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix (values + vectors).
void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& values,
                  std::vector<std::vector<double>>& vectors) {
    const int n = static_cast<int>(a.size());
    vectors.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) vectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] * a[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
        if (off < 1e-24) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
                if (std::abs(apq) < 1e-18) continue;
                const double app = a[static_cast<std::size_t>(p)][static_cast<std::size_t>(p)];
                const double aqq = a[static_cast<std::size_t>(q)][static_cast<std::size_t>(q)];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)];
                    const double akq = a[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)];
                    a[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)] = c * akp - s * akq;
                    a[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
                    const double aqk = a[static_cast<std::size_t>(q)][static_cast<std::size_t>(k)];
                    a[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = c * apk - s * aqk;
                    a[static_cast<std::size_t>(q)][static_cast<std::size_t>(k)] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)];
                    const double vkq = vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)];
                    vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)] = c * vkp - s * vkq;
                    vectors[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
}

}  // namespace

Projection2D pca_project(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    if (n < 3) throw Error("pca_project: need at least 3 rows");
    const int d = static_cast<int>(rows[0].size());
    for (const auto& r : rows)
        if (static_cast<int>(r.size()) != d) throw Error("pca_project: ragged rows");

    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    for (const auto& r : rows)
        for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += r[static_cast<std::size_t>(j)];
    for (double& v : mean) v /= n;

    // sample covariance, 1/(n-1)
    std::vector<std::vector<double>> cov(static_cast<std::size_t>(d),
                                         std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (const auto& r : rows) {
        for (int i = 0; i < d; ++i) {
            const double ci = r[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
            for (int j = i; j < d; ++j) {
                cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
                    ci * (r[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]);
            }
        }
    }
    double trace = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] /= (n - 1);
            cov[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        trace += cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }

    Projection2D proj;
    proj.coords.assign(static_cast<std::size_t>(n), {0.0, 0.0});
    proj.explained = {0.0, 0.0};
    if (trace <= 0.0) return proj;  // zero-variance data

    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
    jacobi_eigen(cov, values, vectors);

    // top-2 components by eigenvalue
    std::array<int, 2> top = {0, 0};
    for (int c = 0; c < 2; ++c) {
        int best = -1;
        for (int i = 0; i < d; ++i) {
            if (c == 1 && i == top[0]) continue;
            if (best < 0 || values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
        }
        top[static_cast<std::size_t>(c)] = best;
    }

    for (int c = 0; c < 2; ++c) {
        const int col = top[static_cast<std::size_t>(c)];
        std::vector<double> component(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) component[static_cast<std::size_t>(i)] = vectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)];
        // sign convention: largest-magnitude loading positive
        int arg = 0;
        for (int i = 1; i < d; ++i)
            if (std::abs(component[static_cast<std::size_t>(i)]) > std::abs(component[static_cast<std::size_t>(arg)])) arg = i;
        if (component[static_cast<std::size_t>(arg)] < 0)
            for (double& v : component) v = -v;

        for (int r = 0; r < n; ++r) {
            double dot = 0.0;
            for (int i = 0; i < d; ++i)
                dot += (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) * component[static_cast<std::size_t>(i)];
            proj.coords[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = dot;
        }
        proj.explained[static_cast<std::size_t>(c)] =
            std::max(0.0, values[static_cast<std::size_t>(col)]) / trace;
    }
    return proj;
}

double silhouette(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
    const int n = static_cast<int>(rows.size());
    if (n != static_cast<int>(labels.size())) throw Error("silhouette: rows/labels length mismatch");

    std::map<int, std::vector<int>> clusters;
    for (int i = 0; i < n; ++i) clusters[labels[static_cast<std::size_t>(i)]].push_back(i);
    if (clusters.size() < 2) throw Error("silhouette: need at least 2 clusters");
    for (const auto& [label, members] : clusters)
        if (members.size() < 2)
            throw Error("silhouette: cluster " + std::to_string(label) + " has fewer than 2 members");

    const auto dist = [&rows](int i, int j) {
        const auto& a = rows[static_cast<std::size_t>(i)];
        const auto& b = rows[static_cast<std::size_t>(j)];
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double d = a[k] - b[k];
            s += d * d;
        }
        return std::sqrt(s);
    };

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int own = labels[static_cast<std::size_t>(i)];
        double a = 0.0;
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, members] : clusters) {
            double sum = 0.0;
            int count = 0;
            for (int j : members) {
                if (j == i) continue;
                sum += dist(i, j);
                ++count;
            }
            if (label == own) {
                a = sum / count;
            } else {
                b = std::min(b, sum / count);
            }
        }
        const double denom = std::max(a, b);
        if (denom == 0.0)
            throw Error("silhouette: degenerate clustering (all distances zero around a point)");
        total += (b - a) / denom;
    }
    return total / n;
}

void emit_projection_csv(const Projection2D& projection, const std::vector<ActivationSet::Meta>& meta,
                         const std::filesystem::path& path) {
    if (projection.coords.size() != meta.size())
        throw Error("emit_projection_csv: projection/meta length mismatch");
    std::vector<std::size_t> order(meta.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&meta](std::size_t a, std::size_t b) { return meta[a].qid < meta[b].qid; });

    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << "qid,task,subtype,gold,predicted,x,y\n";
    char buf[64];
    for (std::size_t i : order) {
        const auto& m = meta[i];
        out << m.qid << ',' << task_name(m.task) << ',' << m.subtype.name() << ','
            << label_name(m.gold) << ',' << label_name(m.predicted);
        std::snprintf(buf, sizeof buf, ",%.17g", projection.coords[i][0]);
        out << buf;
        std::snprintf(buf, sizeof buf, ",%.17g\n", projection.coords[i][1]);
        out << buf;
    }
}

}  // namespace vqacl
