#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vqacl/autodiff.hpp"
#include "vqacl/dataset.hpp"
#include "vqacl/params.hpp"

namespace vqacl {

struct ModelConfig {
    int embed_dim = 32;       // E
    int hidden_dim = 64;      // H
    int attention_hops = 2;   // K
    int mlp_hidden_dim = 64;  // P
    HeadKind head = HeadKind::Single;
    int vocab_size = 0;
    int grid_size = 6;
    int channels = kFeatureChannels;

    int head_size() const { return LabelSpace{head}.size(); }
    LabelSpace label_space() const { return LabelSpace{head}; }
    void validate() const;
};

// Glorot-uniform weight matrices, zero biases, deterministic per seed.
ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

// One question grounded in its scene; the label lives on the question.
struct Example {
    const Question* question = nullptr;
    const SceneGraph* scene = nullptr;
};

std::vector<Example> make_examples(const DatasetBundle& bundle, Task task,
                                   const std::string& split);

// Parameter leaves bound onto a tape for one batch.
struct BoundParams {
    ad::NodeId embed = -1;
    std::array<ad::NodeId, 4> lstm_wx{};  // gates i, f, g, o
    std::array<ad::NodeId, 4> lstm_wh{};
    std::array<ad::NodeId, 4> lstm_b{};
    ad::NodeId img_w = -1;
    ad::NodeId img_b = -1;
    struct Hop {
        ad::NodeId w_v = -1;
        ad::NodeId w_q = -1;
        ad::NodeId w_s = -1;
    };
    std::vector<Hop> hops;
    ad::NodeId mlp_w1 = -1, mlp_b1 = -1, mlp_w2 = -1, mlp_b2 = -1;
    // every bound parameter by name, in binding order
    std::vector<std::pair<std::string, ad::NodeId>> by_name;
};

BoundParams bind_model(ad::Tape& tape, const ParamStore& params, const ModelConfig& config);

struct ForwardResult {
    ad::NodeId logits = -1;
    ad::NodeId penultimate = -1;
    std::vector<ad::NodeId> attention_maps;  // one [G*G] distribution per hop
};

// Final hidden state of a single-layer LSTM over the embedded tokens.
ad::NodeId encode_question(ad::Tape& tape, const BoundParams& bound, const ModelConfig& config,
                           const std::vector<int>& tokens);
// Shared per-cell affine + tanh from the 16 feature channels: [G*G, H].
ad::NodeId encode_image(ad::Tape& tape, const BoundParams& bound, const ModelConfig& config,
                        const Tensor& grid);
// Stacked spatial attention; returns the fused vector and the per-hop maps.
struct AttendResult {
    ad::NodeId fused = -1;
    std::vector<ad::NodeId> maps;
};
AttendResult attend(ad::Tape& tape, const BoundParams& bound, ad::NodeId question_vec,
                    ad::NodeId cells, int hops);
// relu hidden layer (the penultimate activations) then affine to logits.
struct ClassifyResult {
    ad::NodeId logits = -1;
    ad::NodeId penultimate = -1;
};
ClassifyResult classify(ad::Tape& tape, const BoundParams& bound, ad::NodeId fused);

ForwardResult forward(ad::Tape& tape, const BoundParams& bound, const ModelConfig& config,
                      const std::vector<int>& tokens, const SceneGraph& scene);

}  // namespace vqacl
