#include "vqacl/model.hpp"

#include <cmath>

namespace vqacl {

void ModelConfig::validate() const {
    if (embed_dim < 1 || hidden_dim < 1 || attention_hops < 1 || mlp_hidden_dim < 1)
        throw Error("model config: all dimensions must be >= 1");
    if (vocab_size < 1) throw Error("model config: vocab_size must be set");
    if (grid_size < 1) throw Error("model config: grid_size must be >= 1");
    if (channels != kFeatureChannels)
        throw Error("model config: channels must be " + std::to_string(kFeatureChannels));
}

namespace {

constexpr std::array<const char*, 4> kGateNames = {"i", "f", "g", "o"};

Tensor glorot(RngStream& rng, int fan_in, int fan_out, std::vector<int> shape) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-a, a);
    return t;
}

}  // namespace

ParamStore init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    RngStream rng(seed, "param-init");
    ParamStore store;
    store.rng_seed = seed;

    const int e = config.embed_dim, h = config.hidden_dim, p = config.mlp_hidden_dim;
    store.insert("embed.table", glorot(rng, config.vocab_size, e, {config.vocab_size, e}));
    for (const char* gate : kGateNames) {
        store.insert(std::string("lstm.wx_") + gate, glorot(rng, e, h, {e, h}));
        store.insert(std::string("lstm.wh_") + gate, glorot(rng, h, h, {h, h}));
        store.insert(std::string("lstm.b_") + gate, Tensor::zeros({h}));
    }
    store.insert("img.w", glorot(rng, config.channels, h, {config.channels, h}));
    store.insert("img.b", Tensor::zeros({h}));
    for (int k = 0; k < config.attention_hops; ++k) {
        const std::string prefix = "attn.h" + std::to_string(k) + ".";
        store.insert(prefix + "w_v", glorot(rng, h, h, {h, h}));
        store.insert(prefix + "w_q", glorot(rng, h, h, {h, h}));
        store.insert(prefix + "w_s", glorot(rng, h, 1, {h}));
    }
    store.insert("mlp.w1", glorot(rng, h, p, {h, p}));
    store.insert("mlp.b1", Tensor::zeros({p}));
    store.insert("mlp.w2", glorot(rng, p, config.head_size(), {p, config.head_size()}));
    store.insert("mlp.b2", Tensor::zeros({config.head_size()}));
    return store;
}

std::vector<Example> make_examples(const DatasetBundle& bundle, Task task,
                                   const std::string& split) {
    const std::vector<Question>& questions = bundle.task(task).split(split);
    std::vector<Example> out;
    out.reserve(questions.size());
    for (const Question& q : questions) {
        out.push_back(Example{&q, &bundle.scene(q.scene_id)});
    }
    return out;
}

BoundParams bind_model(ad::Tape& tape, const ParamStore& params, const ModelConfig& config) {
    BoundParams b;
    const auto bind = [&](const std::string& name) {
        const ad::NodeId id = tape.param(name, params.at(name));
        b.by_name.emplace_back(name, id);
        return id;
    };
    b.embed = bind("embed.table");
    for (std::size_t gi = 0; gi < kGateNames.size(); ++gi) {
        const std::string gate = kGateNames[gi];
        b.lstm_wx[gi] = bind("lstm.wx_" + gate);
        b.lstm_wh[gi] = bind("lstm.wh_" + gate);
        b.lstm_b[gi] = bind("lstm.b_" + gate);
    }
    b.img_w = bind("img.w");
    b.img_b = bind("img.b");
    for (int k = 0; k < config.attention_hops; ++k) {
        const std::string prefix = "attn.h" + std::to_string(k) + ".";
        BoundParams::Hop hop;
        hop.w_v = bind(prefix + "w_v");
        hop.w_q = bind(prefix + "w_q");
        hop.w_s = bind(prefix + "w_s");
        b.hops.push_back(hop);
    }
    b.mlp_w1 = bind("mlp.w1");
    b.mlp_b1 = bind("mlp.b1");
    b.mlp_w2 = bind("mlp.w2");
    b.mlp_b2 = bind("mlp.b2");
    return b;
}

ad::NodeId encode_question(ad::Tape& tape, const BoundParams& bound, const ModelConfig& config,
                           const std::vector<int>& tokens) {
    if (tokens.empty()) throw Error("encode_question: empty token sequence");
    ad::NodeId h = tape.leaf(Tensor::zeros({config.hidden_dim}));
    ad::NodeId c = tape.leaf(Tensor::zeros({config.hidden_dim}));
    for (int tok : tokens) {
        const ad::NodeId x = tape.embedding_lookup(bound.embed, tok);
        std::array<ad::NodeId, 4> gates{};
        for (std::size_t gi = 0; gi < 4; ++gi) {
            const ad::NodeId pre = tape.add(
                tape.add(tape.matmul(x, bound.lstm_wx[gi]), tape.matmul(h, bound.lstm_wh[gi])),
                bound.lstm_b[gi]);
            gates[gi] = gi == 2 ? tape.tanh(pre) : tape.sigmoid(pre);
        }
        c = tape.add(tape.mul(gates[1], c), tape.mul(gates[0], gates[2]));
        h = tape.mul(gates[3], tape.tanh(c));
    }
    return h;
}

ad::NodeId encode_image(ad::Tape& tape, const BoundParams& bound, const ModelConfig& config,
                        const Tensor& grid) {
    if (grid.ndim() != 2 || grid.dim(0) != config.grid_size * config.grid_size ||
        grid.dim(1) != config.channels)
        throw ShapeError("encode_image: grid shape " + grid.shape_str() + " does not match config");
    const ad::NodeId cells = tape.leaf(grid);
    return tape.tanh(tape.add(tape.matmul(cells, bound.img_w), bound.img_b));
}

AttendResult attend(ad::Tape& tape, const BoundParams& bound, ad::NodeId question_vec,
                    ad::NodeId cells, int hops) {
    if (hops < 1 || hops > static_cast<int>(bound.hops.size()))
        throw Error("attend: hop count outside bound parameters");
    AttendResult result;
    ad::NodeId u = question_vec;
    for (int k = 0; k < hops; ++k) {
        const BoundParams::Hop& hop = bound.hops[static_cast<std::size_t>(k)];
        const ad::NodeId proj =
            tape.tanh(tape.add(tape.matmul(cells, hop.w_v), tape.matmul(u, hop.w_q)));
        const ad::NodeId scores = tape.matmul(proj, hop.w_s);
        const ad::NodeId attn = tape.softmax(scores);
        result.maps.push_back(attn);
        u = tape.add(u, tape.matmul(attn, cells));
    }
    result.fused = u;
    return result;
}

ClassifyResult classify(ad::Tape& tape, const BoundParams& bound, ad::NodeId fused) {
    ClassifyResult result;
    result.penultimate = tape.relu(tape.add(tape.matmul(fused, bound.mlp_w1), bound.mlp_b1));
    result.logits = tape.add(tape.matmul(result.penultimate, bound.mlp_w2), bound.mlp_b2);
    return result;
}

ForwardResult forward(ad::Tape& tape, const BoundParams& bound, const ModelConfig& config,
                      const std::vector<int>& tokens, const SceneGraph& scene) {
    const ad::NodeId q = encode_question(tape, bound, config, tokens);
    const ad::NodeId cells = encode_image(tape, bound, config, encode_features(scene));
    const AttendResult att = attend(tape, bound, q, cells, config.attention_hops);
    const ClassifyResult cls = classify(tape, bound, att.fused);
    ForwardResult result;
    result.logits = cls.logits;
    result.penultimate = cls.penultimate;
    result.attention_maps = att.maps;
    return result;
}

}  // namespace vqacl
