#include <fstream>
#include <set>

#include <doctest.h>

#include "test_util.hpp"
#include "vqacl/report.hpp"

using namespace vqacl;

TEST_SUITE_BEGIN("experiment");

TEST_CASE("experiment config json round trip with defaults") {
    const ExperimentConfig defaults = experiment_config_from_json("{}");
    CHECK(defaults.data.train_size == 8000);
    CHECK(defaults.batch_size == 64);
    CHECK(defaults.seeds == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(defaults.lambda_grid == std::vector<double>{1.0, 10.0, 100.0});

    ExperimentConfig c = test_util::tiny_experiment(7);
    const std::string json_text = experiment_config_to_json(c);
    const ExperimentConfig back = experiment_config_from_json(json_text);
    CHECK(experiment_config_to_json(back) == json_text);
    CHECK(experiment_config_hash(back) == experiment_config_hash(c));

    ExperimentConfig other = c;
    other.lambda_grid = {5.0};
    CHECK(experiment_config_hash(other) != experiment_config_hash(c));

    CHECK_THROWS_AS(experiment_config_from_json("{nope"), Error);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"strategies": ["bogus"]})"), Error);
}

TEST_CASE("model config inference from checkpoint shapes") {
    ExperimentConfig c = test_util::tiny_experiment(1);
    for (HeadKind head : {HeadKind::Single, HeadKind::WhOnly, HeadKind::YnOnly}) {
        const ModelConfig model = c.make_model_config(36, head);
        const ParamStore params = init_params(model, 0);
        const ModelConfig inferred = infer_model_config(params, c.data.grid_size);
        CHECK(inferred.embed_dim == model.embed_dim);
        CHECK(inferred.hidden_dim == model.hidden_dim);
        CHECK(inferred.attention_hops == model.attention_hops);
        CHECK(inferred.mlp_hidden_dim == model.mlp_hidden_dim);
        CHECK(inferred.vocab_size == 36);
        CHECK(inferred.head == head);
    }
}

TEST_CASE("tiny grid produces all 24 sequences and reruns reuse them") {
    ExperimentConfig config = test_util::tiny_experiment(47);
    config.max_epochs = 1;
    config.fisher_samples = 10;
    const DatasetBundle data = build_dataset(config.data);
    const auto runs = test_util::fresh_dir("grid");

    const GridOutcome first = run_grid(data, config, runs, 2);
    CHECK(first.sequences.size() == 24);
    CHECK(first.cells_run == 24);
    CHECK(first.cells_reused == 0);

    int sequence_dirs = 0;
    for (const auto& entry : std::filesystem::directory_iterator(runs))
        if (std::filesystem::exists(entry.path() / "sequence.json")) ++sequence_dirs;
    CHECK(sequence_dirs == 24);
    // per-task baselines for both heads and the shared phase-1 pool
    for (const char* task : {"wh", "yn"}) {
        for (const char* head : {"single", "pertask"}) {
            for (std::uint64_t seed : config.seeds) {
                const auto dir = runs / ("single_" + std::string(task) + "_" + head + "_" +
                                         std::to_string(seed));
                CAPTURE(dir.string());
                CHECK(std::filesystem::exists(dir / "result.json"));
            }
        }
    }

    const GridOutcome second = run_grid(data, config, runs, 2);
    CHECK(second.cells_run == 0);
    CHECK(second.cells_reused == 24);
    REQUIRE(second.sequences.size() == first.sequences.size());
    for (std::size_t i = 0; i < first.sequences.size(); ++i) {
        CHECK(first.sequences[i].strategy == second.sequences[i].strategy);
        CHECK(first.sequences[i].after_second.acc_first ==
              second.sequences[i].after_second.acc_first);
        CHECK(first.sequences[i].after_second.acc_second ==
              second.sequences[i].after_second.acc_second);
    }
}

TEST_CASE("rerunning one cell reproduces its metrics exactly") {
    ExperimentConfig config = test_util::tiny_experiment(53);
    config.max_epochs = 2;
    config.fisher_samples = 8;
    const DatasetBundle data = build_dataset(config.data);

    const auto runs_a = test_util::fresh_dir("cell_a");
    const auto runs_b = test_util::fresh_dir("cell_b");
    const TaskOrder order = TaskOrder::from_name("yn-wh");
    const SequenceResult a = run_cell(data, config, "rehearsal", order, 1, runs_a);
    const SequenceResult b = run_cell(data, config, "rehearsal", order, 1, runs_b);
    CHECK(a.after_first.acc_first == b.after_first.acc_first);
    CHECK(a.after_first.acc_second == b.after_first.acc_second);
    CHECK(a.after_second.acc_first == b.after_second.acc_first);
    CHECK(a.after_second.acc_second == b.after_second.acc_second);
    CHECK(a.after_second.conf_first.counts == b.after_second.conf_first.counts);
    CHECK(a.buffer_size == b.buffer_size);
}

TEST_CASE("phase-1 sharing matches a standalone strategy run") {
    // a cell run with the grid's shared first-task checkpoint must equal the
    // same cell run standalone
    ExperimentConfig config = test_util::tiny_experiment(61);
    config.max_epochs = 1;
    config.strategies = {"naive"};
    config.orders = {"wh-yn"};
    config.seeds = {0};
    config.fisher_samples = 5;
    const DatasetBundle data = build_dataset(config.data);

    const auto runs = test_util::fresh_dir("share_grid");
    const GridOutcome grid = run_grid(data, config, runs, 1);
    REQUIRE(grid.sequences.size() == 1);

    const auto solo_dir = test_util::fresh_dir("share_solo");
    const SequenceResult solo =
        run_cell(data, config, "naive", TaskOrder::from_name("wh-yn"), 0, solo_dir);
    CHECK(solo.after_first.acc_first == grid.sequences[0].after_first.acc_first);
    CHECK(solo.after_second.acc_first == grid.sequences[0].after_second.acc_first);
    CHECK(solo.after_second.acc_second == grid.sequences[0].after_second.acc_second);
}

TEST_CASE("report aggregation and hash checks") {
    ExperimentConfig config = test_util::tiny_experiment(47);
    config.max_epochs = 1;
    config.fisher_samples = 10;
    const DatasetBundle data = build_dataset(config.data);
    const auto runs = test_util::fresh_dir("report_runs");
    run_grid(data, config, runs, 2);

    const Report report = build_report(runs, data);
    CHECK(report.missing.empty());
    CHECK(report.cells.size() == 4);
    for (const char* strategy : {"naive", "cumulative", "ewc", "rehearsal"}) {
        REQUIRE(report.cells.count(strategy));
        for (const char* order : {"wh-yn", "yn-wh"}) {
            const Report::Cell& cell = report.cells.at(strategy).at(order);
            CHECK(cell.first.values.size() == 3);
            // means recomputable from per-seed values
            double mean = 0;
            for (double v : cell.first.values) mean += v;
            CHECK(cell.first.mean == doctest::Approx(mean / 3).epsilon(1e-12));
        }
    }
    CHECK(report.pertask.at("wh_single").values.size() == 3);
    CHECK(report.pertask.at("yn_pertask").values.size() == 3);
    CHECK(report.random_yn_pertask == doctest::Approx(0.5).epsilon(0.01));

    const auto out = test_util::fresh_dir("report_out");
    write_report_files(report, out);
    CHECK(std::filesystem::exists(out / "report.json"));
    CHECK(std::filesystem::exists(out / "report.txt"));

    // a dataset with a different generation config must be refused
    GenConfig other_cfg = config.data;
    other_cfg.seed += 1;
    const DatasetBundle other = build_dataset(other_cfg);
    CHECK_THROWS_AS(build_report(runs, other), Error);
}

TEST_CASE("report on an empty runs directory lists every cell as missing") {
    const DatasetBundle data = build_dataset(test_util::tiny_data(3, 80, 40, 40));
    const Report report = build_report(test_util::fresh_dir("empty_runs"), data);
    CHECK(report.missing.size() == 8);
    CHECK(report.cells.empty());
}

TEST_CASE("report text layout golden") {
    Report report;
    report.data_hash = "cafe";
    report.random_wh_pertask = 0.0909;
    report.random_yn_pertask = 0.5;
    report.random_wh_both = 0.0455;
    report.random_yn_both = 0.25;
    const auto stat = [](std::vector<double> values) {
        Report::Stat s;
        s.values = std::move(values);
        s.finalize();
        return s;
    };
    report.pertask["wh_pertask"] = stat({0.93, 0.95, 0.94});
    report.pertask["yn_pertask"] = stat({0.52, 0.52, 0.52});
    report.pertask["wh_single"] = stat({0.92});
    report.pertask["yn_single"] = stat({0.51});
    Report::Cell naive;
    naive.first = stat({0.0, 0.02, 0.01});
    naive.second = stat({0.6, 0.62, 0.61});
    report.cells["naive"]["wh-yn"] = naive;
    report.missing = {"naive_yn-wh",     "ewc_wh-yn",        "ewc_yn-wh",
                      "rehearsal_wh-yn", "rehearsal_yn-wh",  "cumulative_wh-yn",
                      "cumulative_yn-wh"};

    const std::string txt = render_report_txt(report);
    const std::string expected =
        "Mean accuracy over 3 run(s), desk scale\n"
        "--------------------------------------------------------------------------------------\n"
        "Random (per-task)     Wh: 0.091                       Y/N: 0.500                      \n"
        "Per-task head         Wh: 0.940 (0.008)               Y/N: 0.520 (0.000)              \n"
        "Single head           Wh: 0.920 (0.000)               Y/N: 0.510 (0.000)              \n"
        "--------------------------------------------------------------------------------------\n"
        "CL setups             I) Wh->Y/N                      II) Y/N->Wh                     \n"
        "                      Wh              Y/N             Y/N             Wh              \n"
        "Random (both tasks)   0.045           0.250           0.250           0.045           \n"
        "Naive                 0.010 (0.008)   0.610 (0.008)   --              --              \n"
        "EWC                   --              --              --              --              \n"
        "Rehearsal             --              --              --              --              \n"
        "Cumulative            --              --              --              --              \n"
        "--------------------------------------------------------------------------------------\n"
        "missing cells: naive_yn-wh ewc_wh-yn ewc_yn-wh rehearsal_wh-yn rehearsal_yn-wh "
        "cumulative_wh-yn cumulative_yn-wh\n";
    CHECK(txt == expected);
}

TEST_SUITE_END();
