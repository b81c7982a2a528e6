// Full-scale acceptance suite. Runs the complete desk-scale study (8k train
// examples per task, 3 seeds, all four strategies in both orders) plus the
// property checks, and prints one PASS/FAIL line per criterion.
//
// The workspace is cached under --workspace (default ./acceptance_ws):
// reruns reuse finished cells, so a second invocation is fast.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "../fp_oracle.hpp"
#include "vqacl/analysis.hpp"
#include "vqacl/gradcheck.hpp"
#include "vqacl/report.hpp"

namespace fs = std::filesystem;
using namespace vqacl;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    int id;
    std::string title;
    bool pass = false;
    std::string detail;
};

std::vector<Criterion> g_results;

void record(int id, const std::string& title, bool pass, const std::string& detail) {
    g_results.push_back({id, title, pass, detail});
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << " (" << title
              << "): " << detail << "\n"
              << std::flush;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

ExperimentConfig acceptance_config() {
    ExperimentConfig config;
    config.data.train_size = 8000;
    config.data.val_size = 2000;
    config.data.test_size = 2000;
    config.data.seed = 20240811;
    config.max_epochs = 40;
    config.patience = 5;
    config.seeds = {0, 1, 2};
    config.lambda_grid = {1.0, 10.0, 100.0};
    config.fisher_samples = 1000;
    config.buffer_fraction = 0.05;
    return config;
}

std::map<std::string, std::map<std::string, std::vector<SequenceResult>>> group_sequences(
    const std::vector<SequenceResult>& sequences) {
    std::map<std::string, std::map<std::string, std::vector<SequenceResult>>> grouped;
    for (const SequenceResult& r : sequences) grouped[r.strategy][r.order.name()].push_back(r);
    return grouped;
}

double mean_of(const std::vector<double>& values) {
    double sum = 0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

std::string fmt(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(3);
    out << v;
    return out.str();
}

// criterion 1: whole-model finite differences at the full desk-scale model
void check_gradient_suite(const DatasetBundle& data, const ExperimentConfig& config) {
    const auto start = Clock::now();
    const ModelConfig model =
        config.make_model_config(static_cast<int>(data.vocab.size()), HeadKind::Single);
    const ParamStore params = init_params(model, 7);

    std::vector<Example> batch = make_examples(data, Task::Wh, "train");
    std::vector<Example> yn = make_examples(data, Task::Yn, "train");
    batch.resize(2);
    batch.insert(batch.end(), yn.begin(), yn.begin() + 2);
    const LabelSpace head = model.label_space();

    const LossFn loss_fn = [&](const ParamStore& p, GradMap* grads) {
        ad::Tape tape;
        const BoundParams bound = bind_model(tape, p, model);
        std::vector<ad::NodeId> losses;
        for (const Example& ex : batch) {
            const ForwardResult fwd = forward(tape, bound, model, ex.question->tokens, *ex.scene);
            losses.push_back(tape.cross_entropy(fwd.logits, head.to_head(ex.question->answer)));
        }
        const ad::NodeId loss = tape.mean(tape.concat(losses));
        const double v = tape.scalar_value(loss);
        if (grads) *grads = tape.backward(loss);
        return v;
    };
    const GradCheckResult r = grad_check(loss_fn, params, 1e-4, 200, 13);
    const double secs = seconds_since(start);
    record(1, "gradient suite", r.max_rel_error < 1e-3 && secs < 120.0,
           "max rel err " + fmt(r.max_rel_error) + " over " + std::to_string(r.coords_checked) +
               " coordinates (worst: " + r.worst_param + "), " + fmt(secs) + "s");
}

// criterion 2: independent interpreter agreement on 10^4 questions + yes-rate
void check_oracle_equivalence(const DatasetBundle& data, const fs::path& data_dir) {
    std::map<std::int64_t, nlohmann::json> scenes;
    {
        std::ifstream in(data_dir / "scenes.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            auto s = nlohmann::json::parse(line);
            const std::int64_t id = s.at("scene_id").get<std::int64_t>();
            scenes[id] = std::move(s);
        }
    }
    std::int64_t checked = 0, agreed = 0, yes = 0, yn_total = 0;
    for (const char* task : {"wh", "yn"}) {
        for (const char* split : {"train", "val", "test"}) {
            std::ifstream in(data_dir /
                             ("questions_" + std::string(task) + "_" + split + ".jsonl"));
            std::string line;
            while (std::getline(in, line) && checked < 10000) {
                const auto q = nlohmann::json::parse(line);
                const fp_oracle::Result r =
                    fp_oracle::execute(q.at("fp"), scenes.at(q.at("scene_id").get<std::int64_t>()));
                ++checked;
                const std::string gold = q.at("answer").get<std::string>();
                if (r.ok && r.answer == gold) ++agreed;
                if (std::string(task) == "yn") {
                    ++yn_total;
                    if (gold == "yes") ++yes;
                }
            }
        }
    }
    const double yes_rate =
        yn_total > 0 ? static_cast<double>(yes) / static_cast<double>(yn_total) : 0.0;
    // yes-rate over the full yn train split (>= 2000 questions)
    const SplitStats train_stats = split_stats(data.yn.train);
    const bool pass = checked >= 10000 && agreed == checked && train_stats.yes_rate >= 0.48 &&
                      train_stats.yes_rate <= 0.52;
    record(2, "oracle equivalence", pass,
           std::to_string(agreed) + "/" + std::to_string(checked) +
               " agreement, yn train yes-rate " + fmt(train_stats.yes_rate) +
               (yn_total ? " (sampled " + fmt(yes_rate) + ")" : ""));
}

// criterion 3: naive forgets the first task completely, both directions.
// Grid cells reuse the shared phase-1 checkpoints, so the honest per-sequence
// runtime is the phase-1 (single-run) time plus the cell's own time.
void check_catastrophic_forgetting(
    const std::map<std::string, std::map<std::string, std::vector<SequenceResult>>>& grouped,
    const fs::path& runs_dir, const ExperimentConfig& config) {
    double slowest_phase1 = 0.0;
    for (const Task task : {Task::Wh, Task::Yn}) {
        for (const std::uint64_t seed : config.seeds) {
            const auto dir = runs_dir / single_run_dir_name(task, HeadKind::Single, seed);
            slowest_phase1 = std::max(slowest_phase1, read_single_dir(dir).duration_seconds);
        }
    }
    bool pass = true;
    std::string detail;
    double slowest_cell = 0.0;
    for (const char* order : {"wh-yn", "yn-wh"}) {
        std::vector<double> retention;
        for (const SequenceResult& r : grouped.at("naive").at(order)) {
            retention.push_back(r.after_second.acc_first);
            slowest_cell = std::max(slowest_cell, r.duration_seconds);
        }
        const double m = mean_of(retention);
        pass = pass && retention.size() == 3 && m <= 0.05;
        detail += std::string(order) + " first-task " + fmt(m) + " ";
    }
    const double slowest = slowest_phase1 + slowest_cell;
    pass = pass && slowest <= 1800.0;
    detail += "(sequence runtime bound " + fmt(slowest) + "s)";
    record(3, "catastrophic forgetting", pass, detail);
}

// criterion 4: rehearsal > ewc + 0.05 >= naive ordering on wh->yn retention
void check_strategy_ordering(
    const std::map<std::string, std::map<std::string, std::vector<SequenceResult>>>& grouped) {
    const auto retention = [&](const std::string& strategy) {
        std::vector<double> values;
        for (const SequenceResult& r : grouped.at(strategy).at("wh-yn"))
            values.push_back(r.after_second.acc_first);
        return mean_of(values);
    };
    const double rehearsal = retention("rehearsal");
    const double ewc = retention("ewc");
    const double naive = retention("naive");
    const bool pass = rehearsal > ewc + 0.05 && ewc >= naive && rehearsal >= 0.5;
    record(4, "strategy ordering wh->yn", pass,
           "rehearsal " + fmt(rehearsal) + " > ewc " + fmt(ewc) + " + 0.05, ewc >= naive " +
               fmt(naive) + ", rehearsal >= 0.5");
}

// criterion 5: cumulative within 0.05 of the per-task single-head models and
// the cross-type contrast against naive
void check_cumulative(
    const std::map<std::string, std::map<std::string, std::vector<SequenceResult>>>& grouped,
    const fs::path& runs_dir, const ExperimentConfig& config) {
    std::map<std::string, double> pertask;  // task -> mean accuracy (single head)
    for (const Task task : {Task::Wh, Task::Yn}) {
        std::vector<double> accs;
        for (const std::uint64_t seed : config.seeds) {
            const SingleRunSummary s = read_single_dir(
                runs_dir / single_run_dir_name(task, HeadKind::Single, seed));
            accs.push_back(s.test_accuracy);
        }
        pertask[task_name(task)] = mean_of(accs);
    }

    // cumulative accuracy per task (mean over both orders' cells and seeds)
    std::map<std::string, std::vector<double>> cumulative;
    std::vector<double> cumulative_cross;
    for (const char* order : {"wh-yn", "yn-wh"}) {
        for (const SequenceResult& r : grouped.at("cumulative").at(order)) {
            cumulative[task_name(r.order.first)].push_back(r.after_second.acc_first);
            cumulative[task_name(r.order.second)].push_back(r.after_second.acc_second);
            cumulative_cross.push_back(cross_type_error_rate(r.after_second.conf_first));
            cumulative_cross.push_back(cross_type_error_rate(r.after_second.conf_second));
        }
    }
    bool within = true;
    std::string detail;
    for (const char* task : {"wh", "yn"}) {
        const double diff = std::abs(mean_of(cumulative[task]) - pertask[task]);
        within = within && diff <= 0.05;
        detail += std::string(task) + ": cumulative " + fmt(mean_of(cumulative[task])) +
                  " vs per-task " + fmt(pertask[task]) + " ";
    }

    const double cum_cross = mean_of(cumulative_cross);
    std::vector<double> naive_cross;
    for (const char* order : {"wh-yn", "yn-wh"})
        for (const SequenceResult& r : grouped.at("naive").at(order))
            naive_cross.push_back(cross_type_error_rate(r.after_second.conf_first));
    const double naive_forgotten_cross = mean_of(naive_cross);

    const bool pass = within && cum_cross < 0.05 && naive_forgotten_cross > 0.5;
    record(5, "cumulative non-forgetting", pass,
           detail + "| cumulative cross-type " + fmt(cum_cross) + " < 0.05, naive cross-type " +
               fmt(naive_forgotten_cross) + " > 0.5");
}

// criterion 6: wh->yn retains more than yn->wh for rehearsal and ewc
void check_task_order_asymmetry(
    const std::map<std::string, std::map<std::string, std::vector<SequenceResult>>>& grouped) {
    bool pass = true;
    std::string detail;
    for (const char* strategy : {"rehearsal", "ewc"}) {
        const auto mean_retention = [&](const char* order) {
            std::vector<double> values;
            for (const SequenceResult& r : grouped.at(strategy).at(order))
                values.push_back(r.after_second.acc_first);
            return mean_of(values);
        };
        const double fwd = mean_retention("wh-yn");
        const double bwd = mean_retention("yn-wh");
        pass = pass && fwd >= bwd + 0.05;
        detail += std::string(strategy) + ": " + fmt(fwd) + " vs " + fmt(bwd) + " ";
    }
    record(6, "task-order asymmetry", pass, detail);
}

// criterion 7: analytic stratified baselines and their monte-carlo estimates
void check_random_baselines() {
    std::vector<double> yn_dist(kLabelCount, 0.0);
    yn_dist[static_cast<std::size_t>(kYesLabel)] = 0.5;
    yn_dist[static_cast<std::size_t>(kNoLabel)] = 0.5;
    std::vector<int> yn_golds;
    for (int i = 0; i < 2000; ++i) yn_golds.push_back(i % 2 ? kYesLabel : kNoLabel);
    const BaselineResult yn = stratified_random_baseline(yn_dist, yn_golds, 1, 10000);

    std::vector<double> wh_dist(kWhLabelCount, 1.0 / kWhLabelCount);
    std::vector<int> wh_golds;
    for (int i = 0; i < 1500; ++i) wh_golds.push_back(i % kWhLabelCount);
    const BaselineResult wh = stratified_random_baseline(wh_dist, wh_golds, 2, 10000);

    const bool pass = std::abs(yn.analytic - 0.5) <= 0.001 &&
                      std::abs(wh.analytic - 1.0 / 15.0) <= 0.001 &&
                      std::abs(yn.monte_carlo - yn.analytic) <= 0.02 &&
                      std::abs(wh.monte_carlo - wh.analytic) <= 0.02;
    record(7, "random baselines", pass,
           "yn analytic " + fmt(yn.analytic) + " mc " + fmt(yn.monte_carlo) + ", wh analytic " +
               fmt(wh.analytic) + " mc " + fmt(wh.monte_carlo));
}

// criterion 8: ewc reductions and penalty properties
void check_ewc_properties(const DatasetBundle& data, const ExperimentConfig& config,
                          const fs::path& scratch) {
    // bit-identical naive reduction on a reduced-scale run (same code paths)
    ExperimentConfig small = config;
    small.max_epochs = 2;
    small.fisher_samples = 50;
    GenConfig gcfg = config.data;
    gcfg.train_size = 400;
    gcfg.val_size = 200;
    gcfg.test_size = 200;
    gcfg.seed = derive_seed(config.data.seed, "ewc-reduction");
    const DatasetBundle tiny = build_dataset(gcfg);
    const ModelConfig model =
        small.make_model_config(static_cast<int>(tiny.vocab.size()), HeadKind::Single);
    const TrainConfig tcfg = small.make_train_config();

    SequenceOptions naive_opt{scratch / "naive", "x", nullptr, std::nullopt};
    SequenceOptions ewc_opt{scratch / "ewc0", "x", nullptr, std::nullopt};
    const TaskOrder order = TaskOrder::from_name("wh-yn");
    const SequenceResult naive = run_naive(tiny, order, model, tcfg, 0, naive_opt);
    const SequenceResult ewc0 = run_ewc(tiny, order, model, tcfg, 0.0, 50, 0, ewc_opt);
    const ParamStore pn = load_checkpoint(naive_opt.out_dir / "phase2" / "best.ckpt");
    const ParamStore pe = load_checkpoint(ewc_opt.out_dir / "phase2" / "best.ckpt");
    const bool reduction = pn == pe &&
                           naive.after_second.acc_first == ewc0.after_second.acc_first &&
                           naive.after_second.acc_second == ewc0.after_second.acc_second;

    // penalty properties at the anchor and in lambda
    const ParamStore anchor = init_params(model, 3);
    EwcState state;
    state.anchor = anchor;
    state.fisher = compute_fisher(anchor, model, make_examples(tiny, Task::Wh, "train"), 50, 1);
    state.lambda = 10.0;
    state.sample_count = 50;

    bool fisher_nonneg = true;
    for (const auto& [_, f] : state.fisher)
        for (double v : f.data) fisher_nonneg = fisher_nonneg && v >= 0.0;

    const bool zero_at_anchor = ewc_penalty_value(anchor, state) == 0.0;

    ParamStore displaced = anchor;
    for (auto& [_, t] : displaced.entries)
        for (double& v : t.data) v += 0.01;
    bool monotone = true;
    double prev = -1.0;
    for (double lambda : {0.0, 1.0, 10.0, 100.0, 1e6}) {
        state.lambda = lambda;
        const double p = ewc_penalty_value(displaced, state);
        monotone = monotone && p >= prev;
        prev = p;
    }

    const bool pass = reduction && fisher_nonneg && zero_at_anchor && monotone;
    record(8, "ewc reductions and properties", pass,
           std::string("lambda=0 bit-identical: ") + (reduction ? "yes" : "NO") +
               ", fisher >= 0: " + (fisher_nonneg ? "yes" : "NO") +
               ", penalty 0 at anchor: " + (zero_at_anchor ? "yes" : "NO") +
               ", monotone in lambda: " + (monotone ? "yes" : "NO"));
}

// criterion 9: pca oracle, silhouette contrast, and the 512-row projections
void check_representation_analysis(const DatasetBundle& data, const ExperimentConfig& config,
                                   const fs::path& runs_dir, const fs::path& out_dir) {
    // hand-computed 3-point eigendecomposition
    const std::vector<std::vector<double>> rows = {{0, 0, 5}, {2, 0, 5}, {0, 1, 5}};
    const Projection2D p = pca_project(rows);
    const double l1 = (5.0 + std::sqrt(13.0)) / 6.0;
    const double l2 = (5.0 - std::sqrt(13.0)) / 6.0;
    double vx = -1.0 / 3.0, vy = l1 - 4.0 / 3.0;
    const double norm = std::hypot(vx, vy);
    vx /= norm;
    vy /= norm;
    if ((std::abs(vx) >= std::abs(vy) && vx < 0) || (std::abs(vy) > std::abs(vx) && vy < 0)) {
        vx = -vx;
        vy = -vy;
    }
    bool pca_ok = std::abs(p.explained[0] - l1 / (l1 + l2)) < 1e-9;
    const double mx = 2.0 / 3.0, my = 1.0 / 3.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double expected = (rows[i][0] - mx) * vx + (rows[i][1] - my) * vy;
        pca_ok = pca_ok && std::abs(p.coords[i][0] - expected) < 1e-9;
    }

    // wh-trained vs yn-trained silhouette contrast over wh subtypes
    const fs::path wh_ckpt =
        runs_dir / single_run_dir_name(Task::Wh, HeadKind::Single, config.seeds[0]) / "best.ckpt";
    const fs::path yn_ckpt =
        runs_dir / single_run_dir_name(Task::Yn, HeadKind::Single, config.seeds[0]) / "best.ckpt";
    const AnalyzeResult wh_model = run_analyze(wh_ckpt, data, 512, 5, out_dir / "wh_model");
    const AnalyzeResult yn_model = run_analyze(yn_ckpt, data, 512, 5, out_dir / "yn_model");
    const bool contrast = wh_model.silhouette_wh_subtypes > yn_model.silhouette_wh_subtypes;

    // 512 rows per task in the projection csv
    std::map<std::string, int> rows_per_task;
    {
        std::ifstream in(wh_model.csv_path);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            rows_per_task[line.substr(comma + 1, line.find(',', comma + 1) - comma - 1)] += 1;
        }
    }
    const bool csv_ok = rows_per_task["wh"] == 512 && rows_per_task["yn"] == 512;

    record(9, "representation analysis", pca_ok && contrast && csv_ok,
           std::string("pca oracle: ") + (pca_ok ? "ok" : "FAIL") + ", wh-model silhouette " +
               fmt(wh_model.silhouette_wh_subtypes) + " > yn-model " +
               fmt(yn_model.silhouette_wh_subtypes) + ", csv rows wh/yn " +
               std::to_string(rows_per_task["wh"]) + "/" + std::to_string(rows_per_task["yn"]));
}

// criterion 10: a rerun cell reproduces every reported metric exactly
void check_determinism(const DatasetBundle& data, const ExperimentConfig& config,
                       const std::vector<SequenceResult>& sequences, const fs::path& scratch) {
    const SequenceResult* reference = nullptr;
    for (const SequenceResult& r : sequences) {
        if (r.strategy == "rehearsal" && r.order.name() == "wh-yn" && r.seed == config.seeds[0]) {
            reference = &r;
            break;
        }
    }
    if (!reference) {
        record(10, "determinism", false, "reference cell missing");
        return;
    }
    const SequenceResult rerun =
        run_cell(data, config, "rehearsal", TaskOrder::from_name("wh-yn"), config.seeds[0],
                 scratch / "determinism");
    const bool pass = rerun.after_first.acc_first == reference->after_first.acc_first &&
                      rerun.after_first.acc_second == reference->after_first.acc_second &&
                      rerun.after_second.acc_first == reference->after_second.acc_first &&
                      rerun.after_second.acc_second == reference->after_second.acc_second &&
                      rerun.after_second.conf_first.counts ==
                          reference->after_second.conf_first.counts &&
                      rerun.after_second.conf_second.counts ==
                          reference->after_second.conf_second.counts;
    record(10, "determinism", pass,
           pass ? "rerun cell reproduced all metrics exactly"
                : "rerun cell diverged from the stored metrics");
}

}  // namespace

int main(int argc, char** argv) {
    fs::path workspace = "acceptance_ws";
    int workers = 2;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--workspace") == 0 && i + 1 < argc) workspace = argv[++i];
        if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc) workers = std::atoi(argv[++i]);
    }

    try {
        const ExperimentConfig config = acceptance_config();
        const fs::path data_dir = workspace / "data";
        const fs::path runs_dir = workspace / "runs";
        const fs::path scratch = workspace / "scratch";
        fs::create_directories(workspace);

        std::cout << "acceptance workspace: " << workspace.string() << "\n";

        // dataset (reused when the config hash matches)
        DatasetBundle data;
        bool have_data = false;
        if (fs::exists(data_dir / "gen_config.json")) {
            try {
                data = read_dataset(data_dir);
                have_data = data_config_hash(data.config) == data_config_hash(config.data);
            } catch (const std::exception&) {
                have_data = false;
            }
        }
        if (!have_data) {
            std::cout << "generating dataset...\n" << std::flush;
            data = build_dataset(config.data);
            write_dataset(data, data_dir);
        }

        check_gradient_suite(data, config);
        check_oracle_equivalence(data, data_dir);
        check_random_baselines();
        check_ewc_properties(data, config, scratch);

        std::cout << "running the experiment grid (this is the long part)...\n" << std::flush;
        const auto grid_start = Clock::now();
        const GridOutcome grid = run_grid(data, config, runs_dir, workers);
        std::cout << "grid done in " << fmt(seconds_since(grid_start)) << "s (" << grid.cells_run
                  << " run, " << grid.cells_reused << " reused)\n"
                  << std::flush;

        const auto grouped = group_sequences(grid.sequences);
        check_catastrophic_forgetting(grouped, runs_dir, config);
        check_strategy_ordering(grouped);
        check_cumulative(grouped, runs_dir, config);
        check_task_order_asymmetry(grouped);
        check_representation_analysis(data, config, runs_dir, workspace / "analysis");
        check_determinism(data, config, grid.sequences, scratch);

        // also leave the study report behind
        const Report report = build_report(runs_dir, data);
        write_report_files(report, workspace / "report");
        std::cout << "\n" << render_report_txt(report) << "\n";

        int failures = 0;
        for (const Criterion& c : g_results)
            if (!c.pass) ++failures;
        std::cout << "acceptance: " << (g_results.size() - static_cast<std::size_t>(failures))
                  << "/" << g_results.size() << " criteria passed\n";
        return failures == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "acceptance suite aborted: " << e.what() << "\n";
        return 1;
    }
}
