#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vqacl/model.hpp"

namespace vqacl {

// Penultimate-layer activations for a question sample, with enough metadata
// to color a projection by task / subtype / correctness.
struct ActivationSet {
    struct Meta {
        std::int64_t qid = 0;
        Task task = Task::Wh;
        Subtype subtype;
        int gold = 0;
        int predicted = 0;
    };
    std::vector<std::vector<double>> rows;  // N x P
    std::vector<Meta> meta;
};

// Uniform sample without replacement, stratified equally over the subtypes
// present in `split` when n divides evenly (remainder spread head-first).
// Result ordered by qid.
std::vector<Example> sample_questions(const std::vector<Example>& split, int n,
                                      std::uint64_t seed);

ActivationSet extract_activations(const ParamStore& params, const ModelConfig& config,
                                  const std::vector<Example>& questions);

struct Projection2D {
    std::vector<std::array<double, 2>> coords;
    std::array<double, 2> explained;  // variance fractions, descending
};

// Top-2 principal components of the mean-centered rows via eigendecomposition
// of the covariance (cyclic Jacobi). Sign convention: the largest-magnitude
// loading of each component is positive. Zero-variance input projects to the
// origin with zero explained variance.
Projection2D pca_project(const std::vector<std::vector<double>>& rows);

// Mean silhouette with Euclidean distances in the full-dimensional space.
// Needs >= 2 clusters with >= 2 members each; throws when every distance
// degenerates to zero.
double silhouette(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels);

// CSV columns: qid,task,subtype,gold,predicted,x,y - one row per question,
// ordered by qid, coordinates at full round-trip precision.
void emit_projection_csv(const Projection2D& projection, const std::vector<ActivationSet::Meta>& meta,
                         const std::filesystem::path& path);

}  // namespace vqacl
