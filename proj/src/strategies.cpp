#include "vqacl/strategies.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

namespace vqacl {

std::string TaskOrder::name() const {
    return std::string(task_name(first)) + "-" + task_name(second);
}

TaskOrder TaskOrder::from_name(const std::string& name) {
    TaskOrder order;
    if (name == "wh-yn") {
        order.first = Task::Wh;
        order.second = Task::Yn;
    } else if (name == "yn-wh") {
        order.first = Task::Yn;
        order.second = Task::Wh;
    } else {
        throw Error("unknown task order: " + name + " (expected wh-yn or yn-wh)");
    }
    return order;
}

namespace {

PhaseEval evaluate_phase(const ParamStore& params, const ModelConfig& config,
                         const DatasetBundle& data, TaskOrder order, int selected_epoch) {
    PhaseEval eval;
    eval.selected_epoch = selected_epoch;
    for (const bool is_first : {true, false}) {
        const Task task = is_first ? order.first : order.second;
        const std::vector<Example> test = make_examples(data, task, "test");
        const EvalResult res = evaluate_predictions(params, config, test);
        std::vector<int> golds;
        golds.reserve(test.size());
        for (const Example& ex : test) golds.push_back(ex.question->answer);
        const ConfusionMatrix conf = confusion_matrix(res.predictions, golds);
        if (is_first) {
            eval.acc_first = res.accuracy;
            eval.conf_first = conf;
        } else {
            eval.acc_second = res.accuracy;
            eval.conf_second = conf;
        }
    }
    return eval;
}

void require_single_head(const ModelConfig& config) {
    if (config.head != HeadKind::Single)
        throw Error("sequential strategies require the single-head configuration");
}

struct PhaseOne {
    ParamStore params;
    int selected_epoch = 0;
};

// Reuses the cached first-task parameters when provided; trains and writes
// dir/phase1 otherwise. Either way the phase-1 checkpoint lands in the
// sequence directory so each sequence is self-contained.
PhaseOne phase_one(const DatasetBundle& data, TaskOrder order, const ModelConfig& config,
                   const TrainConfig& base, std::uint64_t seed, const SequenceOptions& options) {
    PhaseOne out;
    if (options.phase1_params) {
        out.params = *options.phase1_params;
        out.selected_epoch = options.phase1_selected_epoch.value_or(0);
        std::filesystem::create_directories(options.out_dir / "phase1");
        CheckpointSidecar side;
        side.config_hash = options.config_hash;
        side.seed = seed;
        side.epoch = out.selected_epoch;
        save_checkpoint(out.params, options.out_dir / "phase1" / "best.ckpt", side);
        return out;
    }
    TrainResult result = train_first_task(data, order.first, config, base, seed);
    CheckpointSidecar side;
    side.config_hash = options.config_hash;
    side.seed = seed;
    side.epoch = result.history.selected_epoch;
    side.val_metric = result.history.selected_metric;
    write_run_dir(options.out_dir / "phase1", result, "{}", side);
    out.selected_epoch = result.history.selected_epoch;
    out.params = std::move(result.best_params);
    return out;
}

// Trains on the second task (optionally with replay data or an EWC penalty)
// selecting by CL score over both validation splits.
TrainResult phase_two(const DatasetBundle& data, TaskOrder order, const ModelConfig& config,
                      const TrainConfig& base, std::uint64_t seed, const ParamStore& warm_start,
                      const EwcState* penalty, std::vector<Example> replay) {
    TrainConfig cfg = base;
    cfg.seed = derive_seed(seed, "train-second");
    cfg.ewc_penalty = penalty;
    cfg.extra_data = std::move(replay);
    const std::vector<Example> train_set = make_examples(data, order.second, "train");
    const std::vector<std::vector<Example>> vals = {make_examples(data, order.first, "val"),
                                                    make_examples(data, order.second, "val")};
    return train(config, train_set, vals, MetricKind::ClScore, cfg, warm_start);
}

using SteadyClock = std::chrono::steady_clock;

void finish_sequence(SequenceResult& result, const DatasetBundle& data, const ModelConfig& config,
                     TaskOrder order, const TrainResult& phase2, std::uint64_t seed,
                     const SequenceOptions& options, SteadyClock::time_point started) {
    CheckpointSidecar side;
    side.config_hash = options.config_hash;
    side.seed = seed;
    side.epoch = phase2.history.selected_epoch;
    side.val_metric = phase2.history.selected_metric;
    write_run_dir(options.out_dir / "phase2", phase2, "{}", side);
    result.after_second = evaluate_phase(phase2.best_params, config, data, order,
                                         phase2.history.selected_epoch);
    result.data_hash = data_config_hash(data.config);
    result.config_hash = options.config_hash;
    result.duration_seconds = std::chrono::duration<double>(SteadyClock::now() - started).count();
    write_sequence_dir(options.out_dir, result);
}

}  // namespace

TrainResult train_first_task(const DatasetBundle& data, Task first, const ModelConfig& config,
                             const TrainConfig& base, std::uint64_t seed) {
    TrainConfig cfg = base;
    cfg.seed = derive_seed(seed, "train-first");
    cfg.ewc_penalty = nullptr;
    cfg.extra_data.clear();
    const ParamStore init = init_params(config, derive_seed(seed, "model-init"));
    const std::vector<Example> train_set = make_examples(data, first, "train");
    const std::vector<std::vector<Example>> vals = {make_examples(data, first, "val")};
    return train(config, train_set, vals, MetricKind::ValAccuracy, cfg, init);
}

SequenceResult run_naive(const DatasetBundle& data, TaskOrder order, const ModelConfig& config,
                         const TrainConfig& base, std::uint64_t seed,
                         const SequenceOptions& options) {
    require_single_head(config);
    const auto started = SteadyClock::now();
    SequenceResult result;
    result.strategy = "naive";
    result.order = order;
    result.seed = seed;

    const PhaseOne p1 = phase_one(data, order, config, base, seed, options);
    result.after_first = evaluate_phase(p1.params, config, data, order, p1.selected_epoch);

    const TrainResult p2 = phase_two(data, order, config, base, seed, p1.params, nullptr, {});
    finish_sequence(result, data, config, order, p2, seed, options, started);
    return result;
}

SequenceResult run_cumulative(const DatasetBundle& data, TaskOrder order,
                              const ModelConfig& config, const TrainConfig& base,
                              std::uint64_t seed, const SequenceOptions& options) {
    require_single_head(config);
    const auto started = SteadyClock::now();
    SequenceResult result;
    result.strategy = "cumulative";
    result.order = order;
    result.seed = seed;

    TrainConfig cfg = base;
    cfg.seed = derive_seed(seed, "train-cumulative");
    cfg.ewc_penalty = nullptr;
    cfg.extra_data.clear();

    std::vector<Example> train_set = make_examples(data, order.first, "train");
    const std::vector<Example> second = make_examples(data, order.second, "train");
    train_set.insert(train_set.end(), second.begin(), second.end());

    const std::vector<std::vector<Example>> vals = {make_examples(data, order.first, "val"),
                                                    make_examples(data, order.second, "val")};
    const ParamStore init = init_params(config, derive_seed(seed, "model-init"));
    TrainResult joint = train(config, train_set, vals, MetricKind::ClScore, cfg, init);

    // one training phase; both reporting slots carry the same evaluation
    result.after_first = evaluate_phase(joint.best_params, config, data, order,
                                        joint.history.selected_epoch);
    finish_sequence(result, data, config, order, joint, seed, options, started);
    return result;
}

SequenceResult run_ewc(const DatasetBundle& data, TaskOrder order, const ModelConfig& config,
                       const TrainConfig& base, double lambda, int fisher_samples,
                       std::uint64_t seed, const SequenceOptions& options) {
    require_single_head(config);
    if (lambda < 0) throw Error("run_ewc: lambda must be >= 0");
    const auto started = SteadyClock::now();
    SequenceResult result;
    result.strategy = "ewc";
    result.order = order;
    result.seed = seed;
    result.lambda = lambda;
    result.fisher_samples = fisher_samples;

    const PhaseOne p1 = phase_one(data, order, config, base, seed, options);
    result.after_first = evaluate_phase(p1.params, config, data, order, p1.selected_epoch);

    EwcState state;
    state.anchor = p1.params;
    state.fisher = compute_fisher(p1.params, config, make_examples(data, order.first, "train"),
                                  fisher_samples, derive_seed(seed, "fisher"));
    state.lambda = lambda;
    state.sample_count = fisher_samples;

    const TrainResult p2 = phase_two(data, order, config, base, seed, p1.params, &state, {});
    finish_sequence(result, data, config, order, p2, seed, options, started);
    return result;
}

SequenceResult run_rehearsal(const DatasetBundle& data, TaskOrder order,
                             const ModelConfig& config, const TrainConfig& base, int buffer_size,
                             std::uint64_t seed, const SequenceOptions& options) {
    require_single_head(config);
    const auto started = SteadyClock::now();
    SequenceResult result;
    result.strategy = "rehearsal";
    result.order = order;
    result.seed = seed;
    result.buffer_size = buffer_size;

    const PhaseOne p1 = phase_one(data, order, config, base, seed, options);
    result.after_first = evaluate_phase(p1.params, config, data, order, p1.selected_epoch);

    const std::vector<Example> buffer = build_rehearsal_buffer(
        make_examples(data, order.first, "train"), buffer_size,
        derive_seed(seed, "rehearsal-buffer"));

    const TrainResult p2 = phase_two(data, order, config, base, seed, p1.params, nullptr, buffer);
    finish_sequence(result, data, config, order, p2, seed, options, started);
    return result;
}

std::map<std::string, Tensor> compute_fisher(const ParamStore& anchor, const ModelConfig& config,
                                             const std::vector<Example>& pool, int sample_count,
                                             std::uint64_t seed, bool empirical) {
    if (sample_count <= 0) throw Error("compute_fisher: sample count must be positive");
    if (sample_count > static_cast<int>(pool.size()))
        throw Error("compute_fisher: sample count exceeds pool size");
    const LabelSpace head = config.label_space();

    RngStream rng(seed, "fisher-sample");
    const std::vector<int> picks =
        rng.sample_without_replacement(static_cast<int>(pool.size()), sample_count);

    std::map<std::string, Tensor> fisher;
    for (const auto& [name, t] : anchor.entries) {
        Tensor zero = t;
        std::fill(zero.data.begin(), zero.data.end(), 0.0);
        zero.requires_grad = false;
        fisher.emplace(name, std::move(zero));
    }

    ad::Tape tape;
    for (const int pick : picks) {
        const Example& ex = pool[static_cast<std::size_t>(pick)];
        tape.reset();
        const BoundParams bound = bind_model(tape, anchor, config);
        const ForwardResult fwd = forward(tape, bound, config, ex.question->tokens, *ex.scene);

        int label = head.to_head(ex.question->answer);
        if (!empirical) {
            // draw the label from the model's own answer distribution
            const Tensor probs = tape.value(tape.softmax(fwd.logits));
            const double u = rng.uniform();
            double cum = 0.0;
            for (int k = 0; k < probs.numel(); ++k) {
                cum += probs[k];
                if (u < cum) {
                    label = k;
                    break;
                }
            }
        }
        const ad::NodeId loss = tape.cross_entropy(fwd.logits, label);
        const GradMap grads = tape.backward(loss);
        for (auto& [name, f] : fisher) {
            const Tensor& g = grads.at(name);
            for (int i = 0; i < f.numel(); ++i) f[i] += g[i] * g[i];
        }
    }
    for (auto& [_, f] : fisher)
        for (double& v : f.data) v /= static_cast<double>(sample_count);
    return fisher;
}

std::vector<Example> build_rehearsal_buffer(const std::vector<Example>& train, int buffer_size,
                                            std::uint64_t seed) {
    if (buffer_size <= 0 || buffer_size > static_cast<int>(train.size()))
        throw Error("build_rehearsal_buffer: size " + std::to_string(buffer_size) +
                    " out of range for train set of " + std::to_string(train.size()));
    RngStream rng(seed, "rehearsal-buffer");
    const std::vector<int> picks =
        rng.sample_without_replacement(static_cast<int>(train.size()), buffer_size);
    std::vector<Example> buffer;
    buffer.reserve(static_cast<std::size_t>(buffer_size));
    for (int i : picks) buffer.push_back(train[static_cast<std::size_t>(i)]);
    return buffer;
}

namespace {

nlohmann::ordered_json phase_to_json(const PhaseEval& eval) {
    return {{"acc_first", eval.acc_first},
            {"acc_second", eval.acc_second},
            {"selected_epoch", eval.selected_epoch}};
}

void phase_from_json(const nlohmann::json& j, PhaseEval& eval) {
    eval.acc_first = j.at("acc_first").get<double>();
    eval.acc_second = j.at("acc_second").get<double>();
    eval.selected_epoch = j.at("selected_epoch").get<int>();
}

}  // namespace

void write_sequence_dir(const std::filesystem::path& dir, const SequenceResult& result) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["strategy"] = result.strategy;
    j["order"] = result.order.name();
    j["seed"] = result.seed;
    j["lambda"] = result.lambda;
    j["fisher_samples"] = result.fisher_samples;
    j["buffer_size"] = result.buffer_size;
    j["duration_seconds"] = result.duration_seconds;
    j["config_hash"] = result.config_hash;
    j["data_hash"] = result.data_hash;
    j["after_first"] = phase_to_json(result.after_first);
    j["after_second"] = phase_to_json(result.after_second);
    {
        std::ofstream out(dir / "sequence.json", std::ios::trunc);
        out << j.dump(2) << "\n";
    }
    const auto write_conf = [&](const std::string& phase, Task task, const ConfusionMatrix& m) {
        std::ofstream out(dir / ("confusion_" + phase + "_" + task_name(task) + ".csv"),
                          std::ios::trunc);
        out << m.to_csv();
    };
    write_conf("phase1", result.order.first, result.after_first.conf_first);
    write_conf("phase1", result.order.second, result.after_first.conf_second);
    write_conf("phase2", result.order.first, result.after_second.conf_first);
    write_conf("phase2", result.order.second, result.after_second.conf_second);
}

SequenceResult read_sequence_dir(const std::filesystem::path& dir) {
    std::ifstream in(dir / "sequence.json");
    if (!in) throw Error("missing sequence.json in " + dir.string());
    const nlohmann::json j = nlohmann::json::parse(in);
    SequenceResult result;
    result.strategy = j.at("strategy").get<std::string>();
    result.order = TaskOrder::from_name(j.at("order").get<std::string>());
    result.seed = j.at("seed").get<std::uint64_t>();
    result.lambda = j.at("lambda").get<double>();
    result.fisher_samples = j.at("fisher_samples").get<int>();
    result.buffer_size = j.at("buffer_size").get<int>();
    result.duration_seconds = j.value("duration_seconds", 0.0);
    result.config_hash = j.at("config_hash").get<std::string>();
    result.data_hash = j.at("data_hash").get<std::string>();
    phase_from_json(j.at("after_first"), result.after_first);
    phase_from_json(j.at("after_second"), result.after_second);

    const auto read_conf = [&](const std::string& phase, Task task, ConfusionMatrix& m) {
        std::ifstream cin(dir / ("confusion_" + phase + "_" + task_name(task) + ".csv"));
        if (!cin) return;
        std::stringstream buf;
        buf << cin.rdbuf();
        m = ConfusionMatrix::from_csv(buf.str());
    };
    read_conf("phase1", result.order.first, result.after_first.conf_first);
    read_conf("phase1", result.order.second, result.after_first.conf_second);
    read_conf("phase2", result.order.first, result.after_second.conf_first);
    read_conf("phase2", result.order.second, result.after_second.conf_second);
    return result;
}

}  // namespace vqacl
