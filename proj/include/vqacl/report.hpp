#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqacl/experiment.hpp"

namespace vqacl {

// Aggregated study results in the paper table's shape: per-task baselines on
// top, then final accuracies per (strategy, order) cell, means over seeds.
struct Report {
    struct Stat {
        std::vector<double> values;
        double mean = 0.0;
        double stddev = 0.0;  // population std; one seed -> 0

        void finalize();
    };
    struct Cell {
        Stat first;   // final accuracy on the order's first task
        Stat second;  // final accuracy on the order's second task
        Stat cross_type_first;   // final cross-type error rate, first task
        Stat cross_type_second;
        std::optional<double> lambda;   // ewc cells
        std::optional<int> buffer_size; // rehearsal cells
    };

    std::string data_hash;
    std::vector<std::string> config_hashes;
    std::map<std::string, Stat> pertask;  // "wh_pertask", "yn_single", ...
    std::map<std::string, std::map<std::string, Cell>> cells;  // strategy -> order -> cell
    std::vector<std::string> missing;

    // analytic stratified baselines computed from the dataset
    double random_wh_pertask = 0.0;
    double random_yn_pertask = 0.0;
    double random_wh_both = 0.0;
    double random_yn_both = 0.0;
    double random_wh_pertask_mc = 0.0;
    double random_yn_pertask_mc = 0.0;
};

// Scans first-level run directories (single_* and sequence cells). Throws
// when runs disagree on the data-config hash.
Report build_report(const std::filesystem::path& runs_dir, const DatasetBundle& data);

std::string render_report_txt(const Report& report);
void write_report_files(const Report& report, const std::filesystem::path& out_dir);

// Fig-2-style analysis of one checkpoint: stratified 512-question samples
// from both test splits, penultimate activations, PCA projection CSV and
// full-dimension silhouette scores per subtype grouping.
struct AnalyzeResult {
    std::string model_name;
    int sample_per_task = 0;
    double silhouette_wh_subtypes = 0.0;
    double silhouette_yn_subtypes = 0.0;
    double silhouette_all_subtypes = 0.0;
    std::array<double, 2> explained = {0.0, 0.0};
    std::filesystem::path csv_path;
    std::filesystem::path json_path;
};

AnalyzeResult run_analyze(const std::filesystem::path& checkpoint, const DatasetBundle& data,
                          int sample_per_task, std::uint64_t seed,
                          const std::filesystem::path& out_dir);

}  // namespace vqacl
