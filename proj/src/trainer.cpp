#include "vqacl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace vqacl {

void TrainConfig::validate() const {
    if (batch_size < 1) throw Error("train config: batch_size must be >= 1");
    if (patience < 1) throw Error("train config: patience must be >= 1");
    if (max_epochs < 0) throw Error("train config: max_epochs must be >= 0");
}

double compute_metric(MetricKind kind, const std::vector<double>& val_accuracies) {
    if (val_accuracies.empty()) throw Error("compute_metric: no validation accuracies");
    if (kind == MetricKind::ValAccuracy) return val_accuracies[0];
    if (val_accuracies.size() != 2)
        throw Error("compute_metric: CL score needs exactly two validation accuracies");
    return (val_accuracies[0] + val_accuracies[1]) / 2.0;
}

int select_best_epoch(const std::vector<EpochRecord>& epochs) {
    int best = 0;
    double best_metric = -1.0;
    for (const EpochRecord& rec : epochs) {
        if (rec.metric > best_metric) {
            best_metric = rec.metric;
            best = rec.epoch;
        }
    }
    return best;
}

TrainResult train(const ModelConfig& config, const std::vector<Example>& train_set,
                  const std::vector<std::vector<Example>>& val_splits, MetricKind metric,
                  const TrainConfig& tcfg, const ParamStore& initial) {
    config.validate();
    tcfg.validate();
    if (tcfg.ewc_penalty) tcfg.ewc_penalty->validate();
    const LabelSpace head = config.label_space();
    for (const Example& ex : train_set) {
        if (!head.contains(ex.question->answer))
            throw Error("train: label " + label_name(ex.question->answer) +
                        " outside the configured head");
    }

    TrainResult result;
    result.best_params = initial;
    result.history.selected_epoch = 0;
    result.history.selected_metric = -1.0;
    if (tcfg.max_epochs == 0) return result;

    ParamStore params = initial;
    AdamState adam = AdamState::init(params, tcfg.adam);

    std::vector<Example> pool = train_set;
    pool.insert(pool.end(), tcfg.extra_data.begin(), tcfg.extra_data.end());
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);

    int epochs_since_improvement = 0;
    for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        RngStream shuffle_rng(tcfg.seed, "shuffle-epoch-" + std::to_string(epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        int visited = 0;
        ad::Tape tape;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(tcfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
            tape.reset();
            const BoundParams bound = bind_model(tape, params, config);
            std::vector<ad::NodeId> losses;
            losses.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const Example& ex = pool[static_cast<std::size_t>(order[i])];
                const ForwardResult fwd =
                    forward(tape, bound, config, ex.question->tokens, *ex.scene);
                losses.push_back(
                    tape.cross_entropy(fwd.logits, head.to_head(ex.question->answer)));
            }
            ad::NodeId batch_loss = tape.mean(tape.concat(losses));
            if (tcfg.ewc_penalty)
                batch_loss = ewc_loss(tape, batch_loss, bound, config, *tcfg.ewc_penalty);

            const double loss_value = tape.scalar_value(batch_loss);
            if (!std::isfinite(loss_value))
                throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(start / static_cast<std::size_t>(tcfg.batch_size)) +
                            ": " + std::to_string(loss_value));
            loss_sum += loss_value * static_cast<double>(end - start);
            visited += static_cast<int>(end - start);

            const GradMap grads = tape.backward(batch_loss);
            adam_step(params, grads, adam);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(visited);
        rec.examples_visited = visited;
        for (const auto& split : val_splits)
            rec.val_accuracies.push_back(evaluate_accuracy(params, config, split));
        rec.metric = compute_metric(metric, rec.val_accuracies);
        result.history.epochs.push_back(rec);

        if (rec.metric > result.history.selected_metric) {
            result.history.selected_metric = rec.metric;
            result.history.selected_epoch = epoch;
            result.best_params = params;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
        }
        if (epochs_since_improvement >= tcfg.patience) break;
    }
    return result;
}

EvalResult evaluate_predictions(const ParamStore& params, const ModelConfig& config,
                                const std::vector<Example>& split) {
    if (split.empty()) throw Error("evaluate: empty split");
    const LabelSpace head = config.label_space();
    EvalResult result;
    result.predictions.reserve(split.size());
    std::int64_t correct = 0;

    ad::Tape tape;
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < split.size(); start += kChunk) {
        const std::size_t end = std::min(split.size(), start + kChunk);
        tape.reset();
        const BoundParams bound = bind_model(tape, params, config);
        for (std::size_t i = start; i < end; ++i) {
            const Example& ex = split[i];
            const ForwardResult fwd = forward(tape, bound, config, ex.question->tokens, *ex.scene);
            const Tensor& logits = tape.value(fwd.logits);
            int argmax = 0;
            for (int k = 1; k < logits.numel(); ++k)
                if (logits[k] > logits[argmax]) argmax = k;
            const int predicted = head.to_single(argmax);
            result.predictions.push_back(predicted);
            if (predicted == ex.question->answer) ++correct;
        }
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(split.size());
    return result;
}

double evaluate_accuracy(const ParamStore& params, const ModelConfig& config,
                         const std::vector<Example>& split) {
    return evaluate_predictions(params, config, split).accuracy;
}

namespace {

nlohmann::ordered_json history_to_json(const RunHistory& history) {
    nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
    for (const EpochRecord& rec : history.epochs) {
        epochs.push_back({{"epoch", rec.epoch},
                          {"train_loss", rec.train_loss},
                          {"val_accuracies", rec.val_accuracies},
                          {"metric", rec.metric},
                          {"examples_visited", rec.examples_visited}});
    }
    return {{"selected_epoch", history.selected_epoch},
            {"selected_metric", history.selected_metric},
            {"epochs", epochs}};
}

}  // namespace

void write_run_dir(const std::filesystem::path& dir, const TrainResult& result,
                   const std::string& config_json, const CheckpointSidecar& sidecar) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "history.json", std::ios::trunc);
        out << history_to_json(result.history).dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "config.json", std::ios::trunc);
        out << config_json << "\n";
    }
    save_checkpoint(result.best_params, dir / "best.ckpt", sidecar);
}

RunHistory read_history(const std::filesystem::path& dir) {
    std::ifstream in(dir / "history.json");
    if (!in) throw Error("missing history.json in " + dir.string());
    const nlohmann::json j = nlohmann::json::parse(in);
    RunHistory history;
    history.selected_epoch = j.at("selected_epoch").get<int>();
    history.selected_metric = j.at("selected_metric").get<double>();
    for (const auto& je : j.at("epochs")) {
        EpochRecord rec;
        rec.epoch = je.at("epoch").get<int>();
        rec.train_loss = je.at("train_loss").get<double>();
        rec.val_accuracies = je.at("val_accuracies").get<std::vector<double>>();
        rec.metric = je.at("metric").get<double>();
        rec.examples_visited = je.at("examples_visited").get<int>();
        history.epochs.push_back(rec);
    }
    return history;
}

}  // namespace vqacl
