#include "vqacl/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vqacl/analysis.hpp"

namespace vqacl {

using nlohmann::json;
using nlohmann::ordered_json;

void Report::Stat::finalize() {
    if (values.empty()) {
        mean = 0.0;
        stddev = 0.0;
        return;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    stddev = std::sqrt(sq / static_cast<double>(values.size()));
}

namespace {

std::string pertask_key(Task task, HeadKind head) {
    return std::string(task_name(task)) + "_" + (head == HeadKind::Single ? "single" : "pertask");
}

std::vector<int> split_golds(const DatasetBundle& data, Task task, const std::string& split) {
    std::vector<int> out;
    for (const Question& q : data.task(task).split(split)) out.push_back(q.answer);
    return out;
}

}  // namespace

Report build_report(const std::filesystem::path& runs_dir, const DatasetBundle& data) {
    Report report;
    std::set<std::string> data_hashes;
    std::set<std::string> config_hashes;

    std::map<std::string, std::vector<SequenceResult>> grouped;  // strategy|order
    std::map<std::string, Report::Stat> pertask;

    std::vector<std::filesystem::path> dirs;
    if (std::filesystem::exists(runs_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(runs_dir))
            if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());

    for (const auto& dir : dirs) {
        if (std::filesystem::exists(dir / "result.json")) {
            const SingleRunSummary s = read_single_dir(dir);
            pertask[pertask_key(s.task, s.head)].values.push_back(s.test_accuracy);
            data_hashes.insert(s.data_hash);
            config_hashes.insert(s.config_hash);
        } else if (std::filesystem::exists(dir / "sequence.json")) {
            const SequenceResult r = read_sequence_dir(dir);
            grouped[r.strategy + "|" + r.order.name()].push_back(r);
            data_hashes.insert(r.data_hash);
            config_hashes.insert(r.config_hash);
        }
    }

    if (data_hashes.size() > 1) {
        std::string list;
        for (const auto& h : data_hashes) list += " " + h;
        throw Error("report: refusing to aggregate runs with mismatched data-config hashes:" +
                    list);
    }
    const std::string own_hash = data_config_hash(data.config);
    if (!data_hashes.empty() && *data_hashes.begin() != own_hash)
        throw Error("report: runs were produced from a different dataset (hash " +
                    *data_hashes.begin() + ", loaded " + own_hash + ")");
    report.data_hash = own_hash;
    report.config_hashes.assign(config_hashes.begin(), config_hashes.end());

    for (auto& [key, stat] : pertask) {
        std::sort(stat.values.begin(), stat.values.end());
        stat.finalize();
        report.pertask.emplace(key, std::move(stat));
    }

    for (auto& [key, results] : grouped) {
        std::sort(results.begin(), results.end(),
                  [](const SequenceResult& a, const SequenceResult& b) { return a.seed < b.seed; });
        const auto bar = key.find('|');
        const std::string strategy = key.substr(0, bar);
        const std::string order = key.substr(bar + 1);
        Report::Cell cell;
        for (const SequenceResult& r : results) {
            cell.first.values.push_back(r.after_second.acc_first);
            cell.second.values.push_back(r.after_second.acc_second);
            cell.cross_type_first.values.push_back(cross_type_error_rate(r.after_second.conf_first));
            cell.cross_type_second.values.push_back(
                cross_type_error_rate(r.after_second.conf_second));
            if (r.strategy == "ewc") cell.lambda = r.lambda;
            if (r.strategy == "rehearsal") cell.buffer_size = r.buffer_size;
        }
        cell.first.finalize();
        cell.second.finalize();
        cell.cross_type_first.finalize();
        cell.cross_type_second.finalize();
        report.cells[strategy][order] = std::move(cell);
    }

    for (const char* strategy : {"naive", "ewc", "rehearsal", "cumulative"}) {
        for (const char* order : {"wh-yn", "yn-wh"}) {
            if (!report.cells.count(strategy) || !report.cells.at(strategy).count(order))
                report.missing.push_back(std::string(strategy) + "_" + order);
        }
    }

    // analytic + sampled random baselines from the dataset itself
    const std::vector<double> wh_dist = answer_distribution(data.wh.train);
    const std::vector<double> yn_dist = answer_distribution(data.yn.train);
    std::vector<double> both_dist(kLabelCount, 0.0);
    for (int i = 0; i < kLabelCount; ++i)
        both_dist[static_cast<std::size_t>(i)] =
            (wh_dist[static_cast<std::size_t>(i)] + yn_dist[static_cast<std::size_t>(i)]) / 2.0;

    constexpr int kTrials = 10000;
    const BaselineResult wh_pertask =
        stratified_random_baseline(wh_dist, split_golds(data, Task::Wh, "test"), 0, kTrials);
    const BaselineResult yn_pertask =
        stratified_random_baseline(yn_dist, split_golds(data, Task::Yn, "test"), 0, kTrials);
    const BaselineResult wh_both =
        stratified_random_baseline(both_dist, split_golds(data, Task::Wh, "test"), 0, kTrials);
    const BaselineResult yn_both =
        stratified_random_baseline(both_dist, split_golds(data, Task::Yn, "test"), 0, kTrials);
    report.random_wh_pertask = wh_pertask.analytic;
    report.random_yn_pertask = yn_pertask.analytic;
    report.random_wh_pertask_mc = wh_pertask.monte_carlo;
    report.random_yn_pertask_mc = yn_pertask.monte_carlo;
    report.random_wh_both = wh_both.analytic;
    report.random_yn_both = yn_both.analytic;
    return report;
}

namespace {

std::string fmt3(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(3);
    out << v;
    return out.str();
}

std::string cell_text(const Report::Cell* cell, bool first_col) {
    if (!cell) return "--";
    const Report::Stat& s = first_col ? cell->first : cell->second;
    if (s.values.empty()) return "--";
    return fmt3(s.mean) + " (" + fmt3(s.stddev) + ")";
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

std::string render_report_txt(const Report& report) {
    std::ostringstream out;
    const std::size_t label_w = 22;
    const std::size_t col_w = 16;

    std::size_t n_runs = 0;
    for (const auto& [_, orders] : report.cells)
        for (const auto& [__, cell] : orders) n_runs = std::max(n_runs, cell.first.values.size());

    out << "Mean accuracy over " << n_runs << " run(s), desk scale\n";
    out << std::string(label_w + 4 * col_w, '-') << "\n";

    const auto pertask_line = [&](const std::string& label, const std::string& key_prefix) {
        out << pad(label, label_w);
        for (const char* task : {"wh", "yn"}) {
            const auto it = report.pertask.find(std::string(task) + "_" + key_prefix);
            std::string text = "--";
            if (it != report.pertask.end() && !it->second.values.empty())
                text = fmt3(it->second.mean) + " (" + fmt3(it->second.stddev) + ")";
            out << pad(std::string(task == std::string("wh") ? "Wh: " : "Y/N: ") + text,
                       2 * col_w);
        }
        out << "\n";
    };

    out << pad("Random (per-task)", label_w)
        << pad("Wh: " + fmt3(report.random_wh_pertask), 2 * col_w)
        << pad("Y/N: " + fmt3(report.random_yn_pertask), 2 * col_w) << "\n";
    pertask_line("Per-task head", "pertask");
    pertask_line("Single head", "single");

    out << std::string(label_w + 4 * col_w, '-') << "\n";
    out << pad("CL setups", label_w) << pad("I) Wh->Y/N", 2 * col_w)
        << pad("II) Y/N->Wh", 2 * col_w) << "\n";
    out << pad("", label_w) << pad("Wh", col_w) << pad("Y/N", col_w) << pad("Y/N", col_w)
        << pad("Wh", col_w) << "\n";

    out << pad("Random (both tasks)", label_w) << pad(fmt3(report.random_wh_both), col_w)
        << pad(fmt3(report.random_yn_both), col_w) << pad(fmt3(report.random_yn_both), col_w)
        << pad(fmt3(report.random_wh_both), col_w) << "\n";

    for (const char* strategy : {"naive", "ewc", "rehearsal", "cumulative"}) {
        std::string label(strategy);
        label[0] = static_cast<char>(std::toupper(label[0]));
        if (label == "Ewc") label = "EWC";
        out << pad(label, label_w);
        for (const char* order : {"wh-yn", "yn-wh"}) {
            const Report::Cell* cell = nullptr;
            const auto sit = report.cells.find(strategy);
            if (sit != report.cells.end()) {
                const auto oit = sit->second.find(order);
                if (oit != sit->second.end()) cell = &oit->second;
            }
            out << pad(cell_text(cell, true), col_w) << pad(cell_text(cell, false), col_w);
        }
        out << "\n";
    }
    out << std::string(label_w + 4 * col_w, '-') << "\n";
    if (!report.missing.empty()) {
        out << "missing cells:";
        for (const auto& m : report.missing) out << " " << m;
        out << "\n";
    }
    return out.str();
}

namespace {

ordered_json stat_to_json(const Report::Stat& s) {
    return {{"mean", s.mean}, {"std", s.stddev}, {"values", s.values}};
}

}  // namespace

void write_report_files(const Report& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    ordered_json j;
    j["data_hash"] = report.data_hash;
    j["config_hashes"] = report.config_hashes;
    j["random_baselines"] = {
        {"wh_pertask_analytic", report.random_wh_pertask},
        {"yn_pertask_analytic", report.random_yn_pertask},
        {"wh_pertask_monte_carlo", report.random_wh_pertask_mc},
        {"yn_pertask_monte_carlo", report.random_yn_pertask_mc},
        {"wh_both_analytic", report.random_wh_both},
        {"yn_both_analytic", report.random_yn_both},
    };
    ordered_json pertask = ordered_json::object();
    for (const auto& [key, stat] : report.pertask) pertask[key] = stat_to_json(stat);
    j["pertask"] = pertask;
    ordered_json cells = ordered_json::object();
    for (const auto& [strategy, orders] : report.cells) {
        ordered_json per_order = ordered_json::object();
        for (const auto& [order, cell] : orders) {
            ordered_json c;
            c["final_first"] = stat_to_json(cell.first);
            c["final_second"] = stat_to_json(cell.second);
            c["cross_type_first"] = stat_to_json(cell.cross_type_first);
            c["cross_type_second"] = stat_to_json(cell.cross_type_second);
            if (cell.lambda) c["lambda"] = *cell.lambda;
            if (cell.buffer_size) c["buffer_size"] = *cell.buffer_size;
            per_order[order] = c;
        }
        cells[strategy] = per_order;
    }
    j["cells"] = cells;
    j["missing"] = report.missing;

    {
        std::ofstream out(out_dir / "report.json", std::ios::trunc);
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir / "report.txt", std::ios::trunc);
        out << render_report_txt(report);
    }
}

AnalyzeResult run_analyze(const std::filesystem::path& checkpoint, const DatasetBundle& data,
                          int sample_per_task, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
    const ParamStore params = load_checkpoint(checkpoint);
    const ModelConfig config = infer_model_config(params, data.config.grid_size);
    if (config.head != HeadKind::Single)
        throw Error("analyze: checkpoint head must cover the single-head label space");
    if (config.vocab_size != static_cast<int>(data.vocab.size()))
        throw Error("analyze: checkpoint vocabulary does not match the dataset");

    AnalyzeResult result;
    result.sample_per_task = sample_per_task;
    std::string stem = checkpoint.stem().string();
    if (stem == "best" && checkpoint.has_parent_path())
        stem = checkpoint.parent_path().filename().string();
    result.model_name = stem;

    const std::vector<Example> wh_sample =
        sample_questions(make_examples(data, Task::Wh, "test"), sample_per_task, seed);
    const std::vector<Example> yn_sample =
        sample_questions(make_examples(data, Task::Yn, "test"), sample_per_task,
                         derive_seed(seed, "yn-sample"));

    const ActivationSet wh_act = extract_activations(params, config, wh_sample);
    const ActivationSet yn_act = extract_activations(params, config, yn_sample);

    const auto subtype_labels = [](const ActivationSet& set) {
        std::vector<int> labels;
        labels.reserve(set.meta.size());
        for (const auto& m : set.meta)
            labels.push_back(static_cast<int>(m.subtype.kind) * 4 + static_cast<int>(m.subtype.attr));
        return labels;
    };

    result.silhouette_wh_subtypes = silhouette(wh_act.rows, subtype_labels(wh_act));
    result.silhouette_yn_subtypes = silhouette(yn_act.rows, subtype_labels(yn_act));

    ActivationSet all;
    all.rows = wh_act.rows;
    all.rows.insert(all.rows.end(), yn_act.rows.begin(), yn_act.rows.end());
    all.meta = wh_act.meta;
    all.meta.insert(all.meta.end(), yn_act.meta.begin(), yn_act.meta.end());
    result.silhouette_all_subtypes = silhouette(all.rows, subtype_labels(all));

    const Projection2D proj = pca_project(all.rows);
    result.explained = proj.explained;

    std::filesystem::create_directories(out_dir);
    result.csv_path = out_dir / ("projection_" + result.model_name + ".csv");
    emit_projection_csv(proj, all.meta, result.csv_path);

    result.json_path = out_dir / ("silhouette_" + result.model_name + ".json");
    ordered_json j;
    j["model"] = result.model_name;
    j["sample_per_task"] = result.sample_per_task;
    j["silhouette_wh_subtypes"] = result.silhouette_wh_subtypes;
    j["silhouette_yn_subtypes"] = result.silhouette_yn_subtypes;
    j["silhouette_all_subtypes"] = result.silhouette_all_subtypes;
    j["explained_variance"] = result.explained;
    std::ofstream out(result.json_path, std::ios::trunc);
    out << j.dump(2) << "\n";
    return result;
}

}  // namespace vqacl
