#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vqacl/adam.hpp"
#include "vqacl/ewc.hpp"
#include "vqacl/model.hpp"

namespace vqacl {

struct TrainConfig {
    int batch_size = 64;
    int max_epochs = 50;
    int patience = 5;
    AdamConfig adam;
    std::uint64_t seed = 0;
    // loss augmentation: EWC quadratic penalty added to every batch loss
    const EwcState* ewc_penalty = nullptr;
    // replay examples concatenated with the train set before each shuffle
    std::vector<Example> extra_data;

    void validate() const;
};

enum class MetricKind { ValAccuracy, ClScore };

double compute_metric(MetricKind kind, const std::vector<double>& val_accuracies);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    std::vector<double> val_accuracies;
    double metric = 0.0;
    int examples_visited = 0;
};

struct RunHistory {
    std::vector<EpochRecord> epochs;
    int selected_epoch = 0;  // 0 = initial parameters (max_epochs == 0 only)
    double selected_metric = 0.0;
};

struct TrainResult {
    RunHistory history;
    ParamStore best_params;
};

// Supervised loop: seeded shuffle per epoch over train+extra, mean
// cross-entropy per batch (plus the EWC penalty when configured), Adam
// updates, per-epoch validation, selection of the best epoch by `metric`,
// early stop after `patience` epochs without improvement. Ties select the
// earliest epoch. A non-finite batch loss aborts with a diagnostic.
TrainResult train(const ModelConfig& config, const std::vector<Example>& train_set,
                  const std::vector<std::vector<Example>>& val_splits, MetricKind metric,
                  const TrainConfig& tcfg, const ParamStore& initial);

// Highest-metric epoch, earliest on ties; empty history selects epoch 0.
int select_best_epoch(const std::vector<EpochRecord>& epochs);

struct EvalResult {
    double accuracy = 0.0;
    // predictions mapped back to the single-head label space
    std::vector<int> predictions;
};

// Argmax predictions over the model head (ties broken toward the lowest
// label index). Throws on an empty split.
EvalResult evaluate_predictions(const ParamStore& params, const ModelConfig& config,
                                const std::vector<Example>& split);
double evaluate_accuracy(const ParamStore& params, const ModelConfig& config,
                         const std::vector<Example>& split);

// run/<name>/{history.json, best.ckpt, config.json}
void write_run_dir(const std::filesystem::path& dir, const TrainResult& result,
                   const std::string& config_json, const CheckpointSidecar& sidecar);
RunHistory read_history(const std::filesystem::path& dir);

}  // namespace vqacl
