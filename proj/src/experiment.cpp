#include "vqacl/experiment.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace vqacl {

using nlohmann::json;
using nlohmann::ordered_json;

ModelConfig ExperimentConfig::make_model_config(int vocab_size, HeadKind head) const {
    ModelConfig m;
    m.embed_dim = embed_dim;
    m.hidden_dim = hidden_dim;
    m.attention_hops = attention_hops;
    m.mlp_hidden_dim = mlp_hidden_dim;
    m.head = head;
    m.vocab_size = vocab_size;
    m.grid_size = data.grid_size;
    return m;
}

TrainConfig ExperimentConfig::make_train_config() const {
    TrainConfig t;
    t.batch_size = batch_size;
    t.max_epochs = max_epochs;
    t.patience = patience;
    t.adam.lr = lr;
    t.adam.beta1 = beta1;
    t.adam.beta2 = beta2;
    t.adam.epsilon = epsilon;
    return t;
}

int ExperimentConfig::rehearsal_buffer_size() const {
    const int b = static_cast<int>(buffer_fraction * data.train_size);
    return std::max(1, b);
}

void ExperimentConfig::validate() const {
    make_train_config().validate();
    if (embed_dim < 1 || hidden_dim < 1 || attention_hops < 1 || mlp_hidden_dim < 1)
        throw Error("experiment config: model dimensions must be >= 1");
    if (seeds.empty()) throw Error("experiment config: need at least one seed");
    if (buffer_fraction <= 0 || buffer_fraction > 1)
        throw Error("experiment config: buffer_fraction must lie in (0,1]");
    if (fisher_samples < 1) throw Error("experiment config: fisher_samples must be >= 1");
    if (lambda_grid.empty()) throw Error("experiment config: lambda_grid must not be empty");
    for (const std::string& s : strategies)
        if (s != "naive" && s != "cumulative" && s != "ewc" && s != "rehearsal")
            throw Error("experiment config: unknown strategy " + s);
    for (const std::string& o : orders) TaskOrder::from_name(o);
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["data"] = json::parse(gen_config_to_json(c.data));
    j["model"] = {{"embed_dim", c.embed_dim},
                  {"hidden_dim", c.hidden_dim},
                  {"attention_hops", c.attention_hops},
                  {"mlp_hidden_dim", c.mlp_hidden_dim}};
    j["train"] = {{"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
                  {"patience", c.patience},     {"lr", c.lr},
                  {"beta1", c.beta1},           {"beta2", c.beta2},
                  {"epsilon", c.epsilon}};
    j["strategies"] = c.strategies;
    j["orders"] = c.orders;
    j["seeds"] = c.seeds;
    j["ewc"] = {{"lambda_grid", c.lambda_grid}, {"fisher_samples", c.fisher_samples}};
    j["rehearsal"] = {{"buffer_fraction", c.buffer_fraction}};
    j["pertask_head_baselines"] = c.pertask_head_baselines;
    j["output_root"] = c.output_root;
    return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("experiment config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    if (j.contains("data")) c.data = gen_config_from_json(j.at("data").dump());
    if (j.contains("model")) {
        const json& m = j.at("model");
        c.embed_dim = m.value("embed_dim", c.embed_dim);
        c.hidden_dim = m.value("hidden_dim", c.hidden_dim);
        c.attention_hops = m.value("attention_hops", c.attention_hops);
        c.mlp_hidden_dim = m.value("mlp_hidden_dim", c.mlp_hidden_dim);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        c.batch_size = t.value("batch_size", c.batch_size);
        c.max_epochs = t.value("max_epochs", c.max_epochs);
        c.patience = t.value("patience", c.patience);
        c.lr = t.value("lr", c.lr);
        c.beta1 = t.value("beta1", c.beta1);
        c.beta2 = t.value("beta2", c.beta2);
        c.epsilon = t.value("epsilon", c.epsilon);
    }
    c.strategies = j.value("strategies", c.strategies);
    c.orders = j.value("orders", c.orders);
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("ewc")) {
        c.lambda_grid = j.at("ewc").value("lambda_grid", c.lambda_grid);
        c.fisher_samples = j.at("ewc").value("fisher_samples", c.fisher_samples);
    }
    if (j.contains("rehearsal"))
        c.buffer_fraction = j.at("rehearsal").value("buffer_fraction", c.buffer_fraction);
    c.pertask_head_baselines = j.value("pertask_head_baselines", c.pertask_head_baselines);
    c.output_root = j.value("output_root", c.output_root);
    c.validate();
    return c;
}

std::string experiment_config_hash(const ExperimentConfig& config) {
    const std::uint64_t h = fnv1a64(experiment_config_to_json(config));
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

ModelConfig infer_model_config(const ParamStore& params, int grid_size) {
    ModelConfig m;
    const Tensor& embed = params.at("embed.table");
    m.vocab_size = embed.dim(0);
    m.embed_dim = embed.dim(1);
    m.hidden_dim = params.at("lstm.wh_i").dim(0);
    m.mlp_hidden_dim = params.at("mlp.w1").dim(1);
    int hops = 0;
    while (params.entries.count("attn.h" + std::to_string(hops) + ".w_v")) ++hops;
    m.attention_hops = hops;
    const int head_size = params.at("mlp.w2").dim(1);
    switch (head_size) {
        case kLabelCount: m.head = HeadKind::Single; break;
        case kWhLabelCount: m.head = HeadKind::WhOnly; break;
        case 2: m.head = HeadKind::YnOnly; break;
        default: throw Error("cannot infer head kind from output size " + std::to_string(head_size));
    }
    m.grid_size = grid_size;
    return m;
}

namespace {

const char* head_tag(HeadKind head) {
    switch (head) {
        case HeadKind::Single: return "single";
        case HeadKind::WhOnly: return "pertask";
        case HeadKind::YnOnly: return "pertask";
    }
    throw Error("bad head kind");
}

}  // namespace

std::string single_run_dir_name(Task task, HeadKind head, std::uint64_t seed) {
    return "single_" + std::string(task_name(task)) + "_" + head_tag(head) + "_" +
           std::to_string(seed);
}

std::string sequence_dir_name(const std::string& strategy, const TaskOrder& order,
                              std::uint64_t seed) {
    return strategy + "_" + order.name() + "_" + std::to_string(seed);
}

SingleRunSummary train_single(const DatasetBundle& data, Task task, HeadKind head,
                              const ExperimentConfig& config, std::uint64_t seed,
                              const std::filesystem::path& out_dir) {
    const auto started = std::chrono::steady_clock::now();
    if (head == HeadKind::WhOnly && task != Task::Wh)
        throw Error("per-task head does not match task");
    if (head == HeadKind::YnOnly && task != Task::Yn)
        throw Error("per-task head does not match task");

    const ModelConfig model =
        config.make_model_config(static_cast<int>(data.vocab.size()), head);
    const TrainConfig tcfg = config.make_train_config();
    TrainResult result = train_first_task(data, task, model, tcfg, seed);

    SingleRunSummary summary;
    summary.task = task;
    summary.head = head;
    summary.seed = seed;
    summary.selected_epoch = result.history.selected_epoch;
    summary.val_metric = result.history.selected_metric;
    summary.config_hash = experiment_config_hash(config);
    summary.data_hash = data_config_hash(data.config);

    const std::vector<Example> test = make_examples(data, task, "test");
    const EvalResult eval = evaluate_predictions(result.best_params, model, test);
    summary.test_accuracy = eval.accuracy;
    summary.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    CheckpointSidecar side;
    side.config_hash = summary.config_hash;
    side.seed = seed;
    side.epoch = summary.selected_epoch;
    side.val_metric = summary.val_metric;
    write_run_dir(out_dir, result, experiment_config_to_json(config), side);

    std::vector<int> golds;
    golds.reserve(test.size());
    for (const Example& ex : test) golds.push_back(ex.question->answer);
    const ConfusionMatrix conf = confusion_matrix(eval.predictions, golds);
    {
        std::ofstream out(out_dir / ("confusion_test_" + std::string(task_name(task)) + ".csv"),
                          std::ios::trunc);
        out << conf.to_csv();
    }
    {
        ordered_json j;
        j["task"] = task_name(task);
        j["head"] = head == HeadKind::Single ? "single" : "per-task";
        j["seed"] = seed;
        j["test_accuracy"] = summary.test_accuracy;
        j["selected_epoch"] = summary.selected_epoch;
        j["val_metric"] = summary.val_metric;
        j["duration_seconds"] = summary.duration_seconds;
        j["config_hash"] = summary.config_hash;
        j["data_hash"] = summary.data_hash;
        std::ofstream out(out_dir / "result.json", std::ios::trunc);
        out << j.dump(2) << "\n";
    }
    return summary;
}

SingleRunSummary read_single_dir(const std::filesystem::path& dir) {
    std::ifstream in(dir / "result.json");
    if (!in) throw Error("missing result.json in " + dir.string());
    const json j = json::parse(in);
    SingleRunSummary s;
    s.task = task_from_name(j.at("task").get<std::string>());
    const std::string head = j.at("head").get<std::string>();
    s.head = head == "single" ? HeadKind::Single
                              : (s.task == Task::Wh ? HeadKind::WhOnly : HeadKind::YnOnly);
    s.seed = j.at("seed").get<std::uint64_t>();
    s.test_accuracy = j.at("test_accuracy").get<double>();
    s.selected_epoch = j.at("selected_epoch").get<int>();
    s.val_metric = j.at("val_metric").get<double>();
    s.duration_seconds = j.value("duration_seconds", 0.0);
    s.config_hash = j.at("config_hash").get<std::string>();
    s.data_hash = j.at("data_hash").get<std::string>();
    return s;
}

namespace {

std::string format_lambda(double lambda) {
    std::ostringstream out;
    out << lambda;
    std::string s = out.str();
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

bool sequence_reusable(const std::filesystem::path& dir, const std::string& config_hash,
                       const std::string& data_hash, SequenceResult* out) {
    if (!std::filesystem::exists(dir / "sequence.json")) return false;
    try {
        SequenceResult r = read_sequence_dir(dir);
        if (r.config_hash != config_hash || r.data_hash != data_hash) return false;
        *out = std::move(r);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

// Pretrained first-task models shared across strategies within one seed.
struct PhaseCache {
    std::map<std::pair<int, std::uint64_t>, ParamStore> params;
    std::map<std::pair<int, std::uint64_t>, int> epochs;

    const ParamStore* find(Task task, std::uint64_t seed) const {
        const auto it = params.find({static_cast<int>(task), seed});
        return it == params.end() ? nullptr : &it->second;
    }
    int epoch(Task task, std::uint64_t seed) const {
        const auto it = epochs.find({static_cast<int>(task), seed});
        return it == epochs.end() ? 0 : it->second;
    }
};

SequenceResult run_one(const DatasetBundle& data, const ExperimentConfig& config,
                       const std::string& strategy, const TaskOrder& order, std::uint64_t seed,
                       const std::filesystem::path& cell_dir, const PhaseCache* cache,
                       std::optional<double> lambda_override,
                       std::optional<int> buffer_override) {
    const ModelConfig model =
        config.make_model_config(static_cast<int>(data.vocab.size()), HeadKind::Single);
    const TrainConfig tcfg = config.make_train_config();

    SequenceOptions options;
    options.out_dir = cell_dir;
    options.config_hash = experiment_config_hash(config);
    if (cache) {
        options.phase1_params = cache->find(order.first, seed);
        if (options.phase1_params)
            options.phase1_selected_epoch = cache->epoch(order.first, seed);
    }

    if (strategy == "naive") return run_naive(data, order, model, tcfg, seed, options);
    if (strategy == "cumulative") return run_cumulative(data, order, model, tcfg, seed, options);
    if (strategy == "rehearsal") {
        const int buffer = buffer_override.value_or(config.rehearsal_buffer_size());
        return run_rehearsal(data, order, model, tcfg, buffer, seed, options);
    }
    if (strategy == "ewc") {
        if (lambda_override) {
            return run_ewc(data, order, model, tcfg, *lambda_override, config.fisher_samples,
                           seed, options);
        }
        // sweep the lambda grid, keep the best validation CL score (ties
        // toward the smaller lambda)
        std::optional<SequenceResult> best;
        double best_metric = -1.0;
        for (const double lambda : config.lambda_grid) {
            SequenceOptions sub = options;
            sub.out_dir = cell_dir / ("lambda_" + format_lambda(lambda));
            const SequenceResult r = run_ewc(data, order, model, tcfg, lambda,
                                             config.fisher_samples, seed, sub);
            const RunHistory h = read_history(sub.out_dir / "phase2");
            if (h.selected_metric > best_metric) {
                best_metric = h.selected_metric;
                best = r;
            }
        }
        write_sequence_dir(cell_dir, *best);
        return *best;
    }
    throw Error("unknown strategy: " + strategy);
}

}  // namespace

SequenceResult run_cell(const DatasetBundle& data, const ExperimentConfig& config,
                        const std::string& strategy, const TaskOrder& order, std::uint64_t seed,
                        const std::filesystem::path& runs_dir,
                        std::optional<double> lambda_override,
                        std::optional<int> buffer_override) {
    config.validate();
    const auto cell_dir = runs_dir / sequence_dir_name(strategy, order, seed);
    return run_one(data, config, strategy, order, seed, cell_dir, nullptr, lambda_override,
                   buffer_override);
}

GridOutcome run_grid(const DatasetBundle& data, const ExperimentConfig& config,
                     const std::filesystem::path& runs_dir, int workers) {
    config.validate();
    std::filesystem::create_directories(runs_dir);
    const std::string config_hash = experiment_config_hash(config);
    const std::string data_hash = data_config_hash(data.config);

    // which first tasks appear in the grid
    std::vector<Task> first_tasks;
    for (const std::string& oname : config.orders) {
        const Task first = TaskOrder::from_name(oname).first;
        if (std::find(first_tasks.begin(), first_tasks.end(), first) == first_tasks.end())
            first_tasks.push_back(first);
    }

    struct Job {
        std::function<void()> fn;
    };
    std::vector<Job> jobs;
    std::mutex mu;
    GridOutcome outcome;
    PhaseCache cache;

    // stage 1: per-task baselines; the single-head ones double as the shared
    // phase-1 checkpoints
    for (const Task task : {Task::Wh, Task::Yn}) {
        const bool needed_as_phase1 =
            std::find(first_tasks.begin(), first_tasks.end(), task) != first_tasks.end();
        for (const std::uint64_t seed : config.seeds) {
            jobs.push_back(Job{[&, task, seed, needed_as_phase1] {
                const auto dir = runs_dir / single_run_dir_name(task, HeadKind::Single, seed);
                bool reuse = false;
                if (std::filesystem::exists(dir / "result.json")) {
                    try {
                        const SingleRunSummary s = read_single_dir(dir);
                        reuse = s.config_hash == config_hash && s.data_hash == data_hash;
                    } catch (const std::exception&) {
                        reuse = false;
                    }
                }
                if (!reuse) train_single(data, task, HeadKind::Single, config, seed, dir);
                if (needed_as_phase1) {
                    CheckpointSidecar side;
                    ParamStore params = load_checkpoint(dir / "best.ckpt", &side);
                    std::lock_guard<std::mutex> lock(mu);
                    cache.params[{static_cast<int>(task), seed}] = std::move(params);
                    cache.epochs[{static_cast<int>(task), seed}] = side.epoch;
                }
            }});
            if (config.pertask_head_baselines) {
                const HeadKind head = task == Task::Wh ? HeadKind::WhOnly : HeadKind::YnOnly;
                jobs.push_back(Job{[&, task, head, seed] {
                    const auto dir = runs_dir / single_run_dir_name(task, head, seed);
                    bool reuse = false;
                    if (std::filesystem::exists(dir / "result.json")) {
                        try {
                            const SingleRunSummary s = read_single_dir(dir);
                            reuse = s.config_hash == config_hash && s.data_hash == data_hash;
                        } catch (const std::exception&) {
                            reuse = false;
                        }
                    }
                    if (!reuse) train_single(data, task, head, config, seed, dir);
                }});
            }
        }
    }

    const auto run_jobs = [&](std::vector<Job>& batch) {
        std::size_t next = 0;
        std::mutex qmu;
        std::exception_ptr first_error;
        const int pool = std::max(1, workers);
        std::vector<std::thread> threads;
        for (int w = 0; w < pool; ++w) {
            threads.emplace_back([&] {
                for (;;) {
                    std::size_t i;
                    {
                        std::lock_guard<std::mutex> lock(qmu);
                        if (next >= batch.size() || first_error) return;
                        i = next++;
                    }
                    try {
                        batch[i].fn();
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(qmu);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    };
    run_jobs(jobs);

    // stage 2: strategy cells
    std::vector<Job> cells;
    for (const std::string& strategy : config.strategies) {
        for (const std::string& oname : config.orders) {
            const TaskOrder order = TaskOrder::from_name(oname);
            for (const std::uint64_t seed : config.seeds) {
                cells.push_back(Job{[&, strategy, order, seed] {
                    const auto cell_dir = runs_dir / sequence_dir_name(strategy, order, seed);
                    SequenceResult result;
                    if (sequence_reusable(cell_dir, config_hash, data_hash, &result)) {
                        std::lock_guard<std::mutex> lock(mu);
                        outcome.sequences.push_back(std::move(result));
                        outcome.cells_reused += 1;
                        return;
                    }
                    result = run_one(data, config, strategy, order, seed, cell_dir, &cache,
                                     std::nullopt, std::nullopt);
                    std::lock_guard<std::mutex> lock(mu);
                    outcome.sequences.push_back(std::move(result));
                    outcome.cells_run += 1;
                }});
            }
        }
    }
    run_jobs(cells);

    // deterministic result order regardless of scheduling
    std::sort(outcome.sequences.begin(), outcome.sequences.end(),
              [](const SequenceResult& a, const SequenceResult& b) {
                  return std::tie(a.strategy, a.order.first, a.seed) <
                         std::tie(b.strategy, b.order.first, b.seed);
              });
    return outcome;
}

}  // namespace vqacl
