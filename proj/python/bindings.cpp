#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vqacl/experiment.hpp"
#include "vqacl/analysis.hpp"
#include "vqacl/report.hpp"

namespace py = pybind11;
using namespace vqacl;

namespace {

ExperimentConfig config_from_json_str(const std::string& config_json) {
    if (config_json.empty()) {
        ExperimentConfig config;
        config.validate();
        return config;
    }
    return experiment_config_from_json(config_json);
}

py::dict stats_dict(const SplitStats& stats) {
    py::dict d;
    d["count"] = stats.count;
    d["yes_rate"] = stats.yes_rate;
    py::dict per;
    for (const auto& [name, count] : stats.per_subtype) per[py::str(name)] = count;
    d["per_subtype"] = per;
    return d;
}

py::dict sequence_dict(const SequenceResult& r) {
    py::dict d;
    d["strategy"] = r.strategy;
    d["order"] = r.order.name();
    d["seed"] = r.seed;
    d["lambda"] = r.lambda;
    d["buffer_size"] = r.buffer_size;
    py::dict p1, p2;
    p1["acc_first"] = r.after_first.acc_first;
    p1["acc_second"] = r.after_first.acc_second;
    p2["acc_first"] = r.after_second.acc_first;
    p2["acc_second"] = r.after_second.acc_second;
    p2["cross_type_first"] = cross_type_error_rate(r.after_second.conf_first);
    p2["cross_type_second"] = cross_type_error_rate(r.after_second.conf_second);
    d["after_first"] = p1;
    d["after_second"] = p2;
    d["config_hash"] = r.config_hash;
    d["data_hash"] = r.data_hash;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "continual-learning VQA laboratory (C++ core)";

    py::register_exception<Error>(m, "VqaclError");

    py::class_<DatasetBundle>(m, "Dataset")
        .def_property_readonly("vocab_size",
                               [](const DatasetBundle& d) { return d.vocab.size(); })
        .def_property_readonly("scene_count",
                               [](const DatasetBundle& d) { return d.scenes.size(); })
        .def_property_readonly("data_hash",
                               [](const DatasetBundle& d) { return data_config_hash(d.config); })
        .def("split_stats", [](const DatasetBundle& d, const std::string& task,
                               const std::string& split) {
            return stats_dict(split_stats(d.task(task_from_name(task)).split(split)));
        });

    m.def(
        "build_dataset",
        [](const std::string& config_json) {
            return build_dataset(config_from_json_str(config_json).data);
        },
        py::arg("config_json") = "");
    m.def("write_dataset", &write_dataset, py::arg("dataset"), py::arg("directory"));
    m.def("load_dataset", &read_dataset, py::arg("directory"));

    m.def(
        "verify_gold_answers",
        [](const DatasetBundle& d) {
            std::int64_t total = 0, agree = 0;
            for (const TaskData* td : {&d.wh, &d.yn}) {
                for (const auto* split : {&td->train, &td->val, &td->test}) {
                    for (const Question& q : *split) {
                        ++total;
                        if (exec_fp(q.fp, d.scene(q.scene_id)) == q.answer) ++agree;
                    }
                }
            }
            return total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
        },
        "re-executes every functional program; returns the agreement fraction");

    m.def(
        "train_single",
        [](const DatasetBundle& data, const std::string& task, const std::string& head,
           const std::string& config_json, std::uint64_t seed, const std::string& out_dir) {
            const Task t = task_from_name(task);
            HeadKind h = HeadKind::Single;
            if (head == "per-task") h = t == Task::Wh ? HeadKind::WhOnly : HeadKind::YnOnly;
            const SingleRunSummary s =
                train_single(data, t, h, config_from_json_str(config_json), seed, out_dir);
            py::dict d;
            d["task"] = task;
            d["head"] = head;
            d["seed"] = s.seed;
            d["test_accuracy"] = s.test_accuracy;
            d["selected_epoch"] = s.selected_epoch;
            d["val_metric"] = s.val_metric;
            return d;
        },
        py::arg("dataset"), py::arg("task"), py::arg("head") = "single",
        py::arg("config_json") = "", py::arg("seed") = 0, py::arg("out_dir"));

    m.def(
        "run_strategy",
        [](const DatasetBundle& data, const std::string& strategy, const std::string& order,
           const std::string& config_json, std::uint64_t seed, const std::string& runs_dir,
           std::optional<double> lambda, std::optional<int> buffer_size) {
            const SequenceResult r =
                run_cell(data, config_from_json_str(config_json), strategy,
                         TaskOrder::from_name(order), seed, runs_dir, lambda, buffer_size);
            return sequence_dict(r);
        },
        py::arg("dataset"), py::arg("strategy"), py::arg("order"), py::arg("config_json") = "",
        py::arg("seed") = 0, py::arg("runs_dir"), py::arg("ewc_lambda") = std::nullopt,
        py::arg("buffer_size") = std::nullopt);

    m.def(
        "evaluate_checkpoint",
        [](const std::string& checkpoint, const DatasetBundle& data, const std::string& task,
           const std::string& split) {
            const ParamStore params = load_checkpoint(checkpoint);
            const ModelConfig config = infer_model_config(params, data.config.grid_size);
            return evaluate_accuracy(params, config,
                                     make_examples(data, task_from_name(task), split));
        },
        py::arg("checkpoint"), py::arg("dataset"), py::arg("task"), py::arg("split") = "test");

    m.def("cl_score", &cl_score, py::arg("acc_first"), py::arg("acc_second"));

    m.def(
        "stratified_random_baseline",
        [](const std::vector<double>& draw_dist, const std::vector<int>& eval_golds,
           std::uint64_t seed, int trials) {
            const BaselineResult r = stratified_random_baseline(draw_dist, eval_golds, seed, trials);
            return py::make_tuple(r.analytic, r.monte_carlo);
        },
        py::arg("draw_dist"), py::arg("eval_golds"), py::arg("seed") = 0,
        py::arg("trials") = 10000);

    m.def(
        "pca_project",
        [](const std::vector<std::vector<double>>& rows) {
            const Projection2D p = pca_project(rows);
            std::vector<std::array<double, 2>> coords = p.coords;
            return py::make_tuple(coords, p.explained);
        },
        py::arg("rows"));

    m.def(
        "silhouette",
        [](const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
            return silhouette(rows, labels);
        },
        py::arg("rows"), py::arg("labels"));

    m.def(
        "analyze_checkpoint",
        [](const std::string& checkpoint, const DatasetBundle& data, int sample_per_task,
           std::uint64_t seed, const std::string& out_dir) {
            const AnalyzeResult r = run_analyze(checkpoint, data, sample_per_task, seed, out_dir);
            py::dict d;
            d["model"] = r.model_name;
            d["sample_per_task"] = r.sample_per_task;
            d["silhouette_wh_subtypes"] = r.silhouette_wh_subtypes;
            d["silhouette_yn_subtypes"] = r.silhouette_yn_subtypes;
            d["silhouette_all_subtypes"] = r.silhouette_all_subtypes;
            d["explained_variance"] = r.explained;
            d["csv"] = r.csv_path.string();
            d["json"] = r.json_path.string();
            return d;
        },
        py::arg("checkpoint"), py::arg("dataset"), py::arg("sample_per_task") = 512,
        py::arg("seed") = 0, py::arg("out_dir"));

    m.attr("__version__") = "0.1.0";
}
