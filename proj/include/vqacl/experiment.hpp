#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vqacl/strategies.hpp"

namespace vqacl {

// Whole-study configuration: data generation, model dimensions, training
// hyperparameters, and the experiment grid. JSON round-trips with full
// defaulting; the hash of the canonical serialization is stamped into every
// artifact.
struct ExperimentConfig {
    GenConfig data;
    int embed_dim = 32;
    int hidden_dim = 64;
    int attention_hops = 2;
    int mlp_hidden_dim = 64;

    int batch_size = 64;
    int max_epochs = 50;
    int patience = 5;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    std::vector<std::string> strategies = {"naive", "cumulative", "ewc", "rehearsal"};
    std::vector<std::string> orders = {"wh-yn", "yn-wh"};
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    std::vector<double> lambda_grid = {1.0, 10.0, 100.0};
    int fisher_samples = 1000;
    double buffer_fraction = 0.05;
    bool pertask_head_baselines = true;
    std::string output_root = "workspace";

    ModelConfig make_model_config(int vocab_size, HeadKind head) const;
    TrainConfig make_train_config() const;
    int rehearsal_buffer_size() const;
    void validate() const;
};

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_hash(const ExperimentConfig& config);

// Model dimensions recovered from a checkpoint's parameter shapes.
ModelConfig infer_model_config(const ParamStore& params, int grid_size);

// Per-task baseline: trains on one task (per-task or single head), writes
// run artifacts + result.json + confusion csv under out_dir.
struct SingleRunSummary {
    Task task = Task::Wh;
    HeadKind head = HeadKind::Single;
    std::uint64_t seed = 0;
    double test_accuracy = 0.0;
    int selected_epoch = 0;
    double val_metric = 0.0;
    double duration_seconds = 0.0;
    std::string config_hash;
    std::string data_hash;
};
SingleRunSummary train_single(const DatasetBundle& data, Task task, HeadKind head,
                              const ExperimentConfig& config, std::uint64_t seed,
                              const std::filesystem::path& out_dir);
SingleRunSummary read_single_dir(const std::filesystem::path& dir);

std::string single_run_dir_name(Task task, HeadKind head, std::uint64_t seed);
std::string sequence_dir_name(const std::string& strategy, const TaskOrder& order,
                              std::uint64_t seed);

// Runs the full strategy grid under runs_dir with a bounded worker pool.
// First-task checkpoints are shared across strategies per (task, seed); cells
// whose sequence.json already matches the config and data hashes are reused,
// which makes reruns idempotent.
struct GridOutcome {
    std::vector<SequenceResult> sequences;
    int cells_run = 0;
    int cells_reused = 0;
};
GridOutcome run_grid(const DatasetBundle& data, const ExperimentConfig& config,
                     const std::filesystem::path& runs_dir, int workers);

// One cell of the grid (the `run-cl` command with explicit flags). For "ewc"
// without an explicit lambda the configured grid is swept and the best
// validation CL score wins.
SequenceResult run_cell(const DatasetBundle& data, const ExperimentConfig& config,
                        const std::string& strategy, const TaskOrder& order, std::uint64_t seed,
                        const std::filesystem::path& runs_dir,
                        std::optional<double> lambda_override = std::nullopt,
                        std::optional<int> buffer_override = std::nullopt);

}  // namespace vqacl
