#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "vqacl/ewc.hpp"
#include "vqacl/metrics.hpp"
#include "vqacl/trainer.hpp"

namespace vqacl {

struct TaskOrder {
    Task first = Task::Wh;
    Task second = Task::Yn;

    std::string name() const;  // "wh-yn" / "yn-wh"
    static TaskOrder from_name(const std::string& name);
};

// Test-set evaluation of one checkpoint on both tasks under the single head.
struct PhaseEval {
    double acc_first = 0.0;
    double acc_second = 0.0;
    ConfusionMatrix conf_first;
    ConfusionMatrix conf_second;
    int selected_epoch = 0;
};

struct SequenceResult {
    std::string strategy;
    TaskOrder order;
    std::uint64_t seed = 0;
    PhaseEval after_first;
    PhaseEval after_second;
    double lambda = 0.0;      // ewc
    int fisher_samples = 0;   // ewc
    int buffer_size = 0;      // rehearsal
    double duration_seconds = 0.0;  // wall time of the whole sequence
    std::string config_hash;
    std::string data_hash;
};

struct SequenceOptions {
    std::filesystem::path out_dir;
    std::string config_hash;
    // pretrained first-task parameters for this (first task, seed) cell;
    // when absent the strategy trains phase 1 itself
    const ParamStore* phase1_params = nullptr;
    std::optional<int> phase1_selected_epoch;
};

// Phase 1 of every warm-start strategy: fresh init, train on the first
// task's train split, select by first-task validation accuracy.
TrainResult train_first_task(const DatasetBundle& data, Task first, const ModelConfig& config,
                             const TrainConfig& base, std::uint64_t seed);

SequenceResult run_naive(const DatasetBundle& data, TaskOrder order, const ModelConfig& config,
                         const TrainConfig& base, std::uint64_t seed,
                         const SequenceOptions& options);

SequenceResult run_cumulative(const DatasetBundle& data, TaskOrder order,
                              const ModelConfig& config, const TrainConfig& base,
                              std::uint64_t seed, const SequenceOptions& options);

SequenceResult run_ewc(const DatasetBundle& data, TaskOrder order, const ModelConfig& config,
                       const TrainConfig& base, double lambda, int fisher_samples,
                       std::uint64_t seed, const SequenceOptions& options);

SequenceResult run_rehearsal(const DatasetBundle& data, TaskOrder order,
                             const ModelConfig& config, const TrainConfig& base, int buffer_size,
                             std::uint64_t seed, const SequenceOptions& options);

// Diagonal Fisher estimate at `anchor`: mean squared gradient of
// -log p(y|x) over `sample_count` examples drawn without replacement.
// Gold labels by default (empirical Fisher); with empirical=false the label
// is sampled from the model's own distribution.
std::map<std::string, Tensor> compute_fisher(const ParamStore& anchor, const ModelConfig& config,
                                             const std::vector<Example>& pool, int sample_count,
                                             std::uint64_t seed, bool empirical = true);

// Uniform sample without replacement from the first task's train split.
std::vector<Example> build_rehearsal_buffer(const std::vector<Example>& train, int buffer_size,
                                            std::uint64_t seed);

// sequence.json + confusion_<phase>_<task>.csv under the sequence directory
void write_sequence_dir(const std::filesystem::path& dir, const SequenceResult& result);
SequenceResult read_sequence_dir(const std::filesystem::path& dir);

}  // namespace vqacl
