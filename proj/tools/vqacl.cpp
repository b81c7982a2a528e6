// Batch front door for the continual-learning VQA laboratory:
//   gen-data, train-single, run-cl, report, analyze.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vqacl/experiment.hpp"
#include "vqacl/report.hpp"

namespace fs = std::filesystem;
using namespace vqacl;

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) {
        ExperimentConfig config;
        config.validate();
        return config;
    }
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return experiment_config_from_json(buf.str());
}

fs::path output_root(const ExperimentConfig& config) {
    if (const char* env = std::getenv("VQACL_OUTPUT_ROOT")) return fs::path(env);
    return fs::path(config.output_root);
}

void print_split_line(const std::string& name, const SplitStats& stats, bool yn) {
    std::cout << "  " << name << ": " << stats.count << " questions";
    if (yn) std::cout << ", yes-rate " << stats.yes_rate;
    std::cout << "\n    per subtype:";
    for (const auto& [subtype, count] : stats.per_subtype)
        std::cout << " " << subtype << "=" << count;
    std::cout << "\n";
}

int cmd_gen_data(const std::string& config_path, std::string out_dir) {
    const ExperimentConfig config = load_config(config_path);
    if (out_dir.empty()) out_dir = (output_root(config) / "data").string();

    std::cout << "generating dataset (seed " << config.data.seed << ", "
              << config.data.train_size << "/" << config.data.val_size << "/"
              << config.data.test_size << " per task)...\n";
    const DatasetBundle bundle = build_dataset(config.data);
    write_dataset(bundle, out_dir);

    std::cout << "wrote " << out_dir << " (" << bundle.scenes.size() << " scenes, data hash "
              << data_config_hash(bundle.config) << ")\n";
    for (Task task : {Task::Wh, Task::Yn}) {
        std::cout << task_name(task) << ":\n";
        const TaskData& td = bundle.task(task);
        print_split_line("train", split_stats(td.train), task == Task::Yn);
        print_split_line("val", split_stats(td.val), task == Task::Yn);
        print_split_line("test", split_stats(td.test), task == Task::Yn);
    }
    return 0;
}

int cmd_train_single(const std::string& config_path, const std::string& data_dir,
                     const std::string& task_str, const std::string& head_str,
                     std::uint64_t seed, std::string out_dir) {
    const ExperimentConfig config = load_config(config_path);
    const fs::path data_path = data_dir.empty() ? output_root(config) / "data" : fs::path(data_dir);
    const DatasetBundle bundle = read_dataset(data_path);

    const Task task = task_from_name(task_str);
    HeadKind head = HeadKind::Single;
    if (head_str == "per-task") {
        head = task == Task::Wh ? HeadKind::WhOnly : HeadKind::YnOnly;
    } else if (head_str != "single") {
        throw CLI::ValidationError("--head must be per-task or single");
    }

    fs::path dir = out_dir.empty()
                       ? output_root(config) / "runs" / single_run_dir_name(task, head, seed)
                       : fs::path(out_dir);
    const SingleRunSummary summary = train_single(bundle, task, head, config, seed, dir);
    std::cout << "task " << task_name(task) << " head " << head_str << " seed " << seed
              << ": test accuracy " << summary.test_accuracy << " (epoch "
              << summary.selected_epoch << ")\n"
              << "run dir: " << dir.string() << "\n";
    return 0;
}

int cmd_run_cl(const std::string& config_path, const std::string& data_dir,
               const std::string& strategy, const std::string& order_str, std::int64_t seed,
               double lambda, int buffer_size, int workers, std::string runs_dir) {
    const bool single_cell = !strategy.empty() || !order_str.empty() || seed >= 0;
    if (single_cell) {
        if (strategy.empty() || order_str.empty() || seed < 0)
            throw CLI::ValidationError(
                "single-cell mode needs --strategy, --order and --seed together");
        if (strategy != "naive" && strategy != "cumulative" && strategy != "ewc" &&
            strategy != "rehearsal")
            throw CLI::ValidationError("unknown strategy: " + strategy);
        if (order_str != "wh-yn" && order_str != "yn-wh")
            throw CLI::ValidationError("unknown order: " + order_str);
    }

    const ExperimentConfig config = load_config(config_path);
    const fs::path data_path = data_dir.empty() ? output_root(config) / "data" : fs::path(data_dir);
    const DatasetBundle bundle = read_dataset(data_path);
    const fs::path runs =
        runs_dir.empty() ? output_root(config) / "runs" : fs::path(runs_dir);

    if (single_cell) {
        const TaskOrder order = TaskOrder::from_name(order_str);
        std::optional<double> lambda_opt;
        if (lambda >= 0) lambda_opt = lambda;
        std::optional<int> buffer_opt;
        if (buffer_size > 0) buffer_opt = buffer_size;
        const SequenceResult result =
            run_cell(bundle, config, strategy, order, static_cast<std::uint64_t>(seed), runs,
                     lambda_opt, buffer_opt);
        std::cout << "sequence " << sequence_dir_name(strategy, order, result.seed)
                  << ": after phase 2, " << task_name(order.first) << " "
                  << result.after_second.acc_first << ", " << task_name(order.second) << " "
                  << result.after_second.acc_second << "\n";
        return 0;
    }

    const GridOutcome outcome = run_grid(bundle, config, runs, workers);
    std::cout << "grid complete: " << outcome.sequences.size() << " sequences ("
              << outcome.cells_run << " run, " << outcome.cells_reused << " reused)\n";
    return 0;
}

int cmd_report(const std::string& config_path, const std::string& data_dir,
               std::string runs_dir, std::string out_dir) {
    const ExperimentConfig config = load_config(config_path);
    const fs::path data_path = data_dir.empty() ? output_root(config) / "data" : fs::path(data_dir);
    const DatasetBundle bundle = read_dataset(data_path);
    if (runs_dir.empty()) runs_dir = (output_root(config) / "runs").string();
    if (out_dir.empty()) out_dir = (output_root(config) / "report").string();

    const Report report = build_report(runs_dir, bundle);
    write_report_files(report, out_dir);
    std::cout << render_report_txt(report);
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int cmd_analyze(const std::string& config_path, const std::string& data_dir,
                const std::string& checkpoint, int sample, std::uint64_t seed,
                std::string out_dir) {
    const ExperimentConfig config = load_config(config_path);
    const fs::path data_path = data_dir.empty() ? output_root(config) / "data" : fs::path(data_dir);
    const DatasetBundle bundle = read_dataset(data_path);
    if (out_dir.empty()) out_dir = (output_root(config) / "analysis").string();

    const AnalyzeResult result = run_analyze(checkpoint, bundle, sample, seed, out_dir);
    std::cout << "model " << result.model_name << ": silhouette wh-subtypes "
              << result.silhouette_wh_subtypes << ", yn-subtypes "
              << result.silhouette_yn_subtypes << ", all " << result.silhouette_all_subtypes
              << "\n"
              << "projection: " << result.csv_path.string() << "\n"
              << "scores: " << result.json_path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale continual-learning VQA laboratory"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir, runs_dir;
    std::string task_str = "wh", head_str = "single", strategy, order_str, checkpoint;
    std::uint64_t seed_u = 0;
    std::int64_t seed_s = -1;
    double lambda = -1.0;
    int buffer_size = 0, workers = 2, sample = 512;

    auto* gen = app.add_subcommand("gen-data", "generate the two-task dataset");
    gen->add_option("--config", config_path, "experiment config JSON");
    gen->add_option("--out", out_dir, "output directory (default <root>/data)");

    auto* single = app.add_subcommand("train-single", "train a per-task baseline model");
    single->add_option("--config", config_path, "experiment config JSON");
    single->add_option("--data", data_dir, "dataset directory");
    single->add_option("--task", task_str, "wh or yn")->required();
    single->add_option("--head", head_str, "per-task or single");
    single->add_option("--seed", seed_u, "run seed");
    single->add_option("--out", out_dir, "run directory");

    auto* cl = app.add_subcommand("run-cl", "run CL sequences (one cell or the whole grid)");
    cl->add_option("--config", config_path, "experiment config JSON");
    cl->add_option("--data", data_dir, "dataset directory");
    cl->add_option("--strategy", strategy, "naive|cumulative|ewc|rehearsal");
    cl->add_option("--order", order_str, "wh-yn or yn-wh");
    cl->add_option("--seed", seed_s, "run seed");
    cl->add_option("--lambda", lambda, "EWC strength (skips the lambda grid)");
    cl->add_option("--buffer-size", buffer_size, "rehearsal buffer size");
    cl->add_option("--workers", workers, "parallel cells in grid mode");
    cl->add_option("--out", runs_dir, "runs directory");

    auto* rep = app.add_subcommand("report", "aggregate runs into the study table");
    rep->add_option("--config", config_path, "experiment config JSON");
    rep->add_option("--data", data_dir, "dataset directory");
    rep->add_option("--runs-dir", runs_dir, "runs directory");
    rep->add_option("--out", out_dir, "report output directory");

    auto* ana = app.add_subcommand("analyze", "penultimate-layer projection + silhouettes");
    ana->add_option("--config", config_path, "experiment config JSON");
    ana->add_option("--data", data_dir, "dataset directory");
    ana->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    ana->add_option("--sample", sample, "questions sampled per task");
    ana->add_option("--seed", seed_u, "sampling seed");
    ana->add_option("--out", out_dir, "analysis output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_dir);
        if (single->parsed())
            return cmd_train_single(config_path, data_dir, task_str, head_str, seed_u, out_dir);
        if (cl->parsed())
            return cmd_run_cl(config_path, data_dir, strategy, order_str, seed_s, lambda,
                              buffer_size, workers, runs_dir);
        if (rep->parsed()) return cmd_report(config_path, data_dir, runs_dir, out_dir);
        if (ana->parsed())
            return cmd_analyze(config_path, data_dir, checkpoint, sample, seed_u, out_dir);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
