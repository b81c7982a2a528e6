#pragma once

#include <filesystem>
#include <string>

#include "vqacl/experiment.hpp"

namespace test_util {

// Small-but-real dataset + model settings that keep unit tests in the
// sub-second range.
inline vqacl::GenConfig tiny_data(std::uint64_t seed = 5, int train = 200, int val = 80,
                                  int test = 80) {
    vqacl::GenConfig c;
    c.train_size = train;
    c.val_size = val;
    c.test_size = test;
    c.seed = seed;
    return c;
}

inline vqacl::ExperimentConfig tiny_experiment(std::uint64_t data_seed = 5) {
    vqacl::ExperimentConfig c;
    c.data = tiny_data(data_seed, 120, 60, 60);
    c.embed_dim = 8;
    c.hidden_dim = 16;
    c.attention_hops = 2;
    c.mlp_hidden_dim = 16;
    c.batch_size = 32;
    c.max_epochs = 2;
    c.patience = 2;
    c.seeds = {0, 1, 2};
    c.lambda_grid = {10.0};
    c.fisher_samples = 20;
    c.buffer_fraction = 0.1;
    return c;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "vqacl_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace test_util
