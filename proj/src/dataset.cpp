#include "vqacl/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace vqacl {

using nlohmann::json;
using nlohmann::ordered_json;

std::string Subtype::name() const {
    return std::string(kind == Query ? "query_" : "equal_") + attribute_name(attr);
}

Subtype Subtype::from_name(const std::string& name) {
    Subtype s;
    if (name.rfind("query_", 0) == 0) {
        s.kind = Query;
        s.attr = attribute_from_name(name.substr(6));
    } else if (name.rfind("equal_", 0) == 0) {
        s.kind = Equal;
        s.attr = attribute_from_name(name.substr(6));
    } else {
        throw Error("unknown subtype: " + name);
    }
    return s;
}

std::map<std::string, int> build_vocab() {
    std::set<std::string> words = {"what", "is",   "the",  "of",   "does", "have", "same",
                                   "as",   "on",   "left", "right", "half", "thing", "?"};
    for (const char* w : kColorNames) words.insert(w);
    for (const char* w : kMaterialNames) words.insert(w);
    for (const char* w : kSizeNames) words.insert(w);
    // shape nouns as they appear in text, plus the label words for shapes
    words.insert({"cube", "ball", "cylinder", "sphere"});
    for (Attribute a : kAttributes) words.insert(attribute_name(a));
    words.insert({"yes", "no"});

    std::map<std::string, int> vocab;
    int index = 0;
    for (const std::string& w : words) vocab.emplace(w, index++);
    return vocab;
}

std::vector<int> tokenize(const std::string& text, const std::map<std::string, int>& vocab) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        auto it = vocab.find(word);
        if (it == vocab.end()) throw Error("token not in vocabulary: '" + word + "'");
        out.push_back(it->second);
    }
    return out;
}

std::string detokenize(const std::vector<int>& tokens, const std::map<std::string, int>& vocab) {
    std::vector<std::string> reverse(vocab.size());
    for (const auto& [word, idx] : vocab) reverse[static_cast<std::size_t>(idx)] = word;
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const int t = tokens[i];
        if (t < 0 || t >= static_cast<int>(reverse.size()))
            throw Error("token index out of range: " + std::to_string(t));
        if (i) out += ' ';
        out += reverse[static_cast<std::size_t>(t)];
    }
    return out;
}

namespace {

// A referring expression: attribute values it pins down plus an optional
// left/right-half restriction.
struct RefExpr {
    std::array<int, 4> values = {-1, -1, -1, -1};  // indexed by Attribute
    std::optional<Side> side;
};

bool matches(const Object& o, const RefExpr& ref, const SceneGraph& scene) {
    for (Attribute a : kAttributes) {
        const int want = ref.values[static_cast<std::size_t>(a)];
        if (want >= 0 && o.attr(a) != want) return false;
    }
    if (ref.side) {
        const bool want_left = *ref.side == Side::Left;
        if (scene.on_left(o) != want_left) return false;
    }
    return true;
}

int match_count(const SceneGraph& scene, const RefExpr& ref) {
    int n = 0;
    for (const Object& o : scene.objects) n += matches(o, ref, scene) ? 1 : 0;
    return n;
}

RefExpr ref_from_subset(const Object& target, const std::vector<Attribute>& subset,
                        std::optional<Side> side) {
    RefExpr ref;
    for (Attribute a : subset) ref.values[static_cast<std::size_t>(a)] = target.attr(a);
    ref.side = side;
    return ref;
}

// Unique referring expression for `target` from 1-3 attributes other than
// `exclude`, optionally restricted to the target's half of the grid. The
// side restriction is attempted first with probability side_prob, and used
// as a fallback when no attribute conjunction alone is unique.
std::optional<RefExpr> make_ref(const SceneGraph& scene, const Object& target, Attribute exclude,
                                RngStream& rng, double side_prob) {
    std::vector<Attribute> allowed;
    for (Attribute a : kAttributes)
        if (a != exclude) allowed.push_back(a);

    std::vector<std::vector<Attribute>> subsets;
    const int n = static_cast<int>(allowed.size());
    for (int mask = 1; mask < (1 << n); ++mask) {
        std::vector<Attribute> s;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) s.push_back(allowed[static_cast<std::size_t>(i)]);
        if (s.size() <= 3) subsets.push_back(std::move(s));
    }
    rng.shuffle(subsets);

    const Side target_side = scene.on_left(target) ? Side::Left : Side::Right;
    const bool try_side_first = rng.uniform() < side_prob;

    if (try_side_first) {
        for (const auto& s : subsets) {
            const RefExpr ref = ref_from_subset(target, s, target_side);
            if (match_count(scene, ref) == 1) return ref;
        }
    }
    for (const auto& s : subsets) {
        const RefExpr ref = ref_from_subset(target, s, std::nullopt);
        if (match_count(scene, ref) == 1) return ref;
    }
    if (!try_side_first) {
        for (const auto& s : subsets) {
            const RefExpr ref = ref_from_subset(target, s, target_side);
            if (match_count(scene, ref) == 1) return ref;
        }
    }
    return std::nullopt;
}

// filters in surface order (size, color, material, shape, side), then unique
std::vector<FpStep> ref_steps(const RefExpr& ref) {
    std::vector<FpStep> steps;
    const std::array<Attribute, 4> order = {Attribute::Size, Attribute::Color,
                                            Attribute::Material, Attribute::Shape};
    for (Attribute a : order) {
        const int v = ref.values[static_cast<std::size_t>(a)];
        if (v >= 0) steps.push_back(FpStep::filter(a, v));
    }
    if (ref.side) steps.push_back(FpStep::filter_side(*ref.side));
    steps.push_back(FpStep::unique());
    return steps;
}

// "large red metal cube on the left half"; "thing" when shape is unspecified
std::string ref_text(const RefExpr& ref) {
    std::string out;
    const auto append = [&out](const std::string& w) {
        if (!out.empty()) out += ' ';
        out += w;
    };
    if (ref.values[3] >= 0) append(attribute_value_name(Attribute::Size, ref.values[3]));
    if (ref.values[0] >= 0) append(attribute_value_name(Attribute::Color, ref.values[0]));
    if (ref.values[2] >= 0) append(attribute_value_name(Attribute::Material, ref.values[2]));
    if (ref.values[1] >= 0) {
        static const std::array<const char*, 3> nouns = {"cube", "ball", "cylinder"};
        append(nouns[static_cast<std::size_t>(ref.values[1])]);
    } else {
        append("thing");
    }
    if (ref.side) {
        append("on");
        append("the");
        append(*ref.side == Side::Left ? "left" : "right");
        append("half");
    }
    return out;
}

Question finish_question(const SceneGraph& scene, Task task, Subtype subtype, std::string text,
                         FunctionalProgram fp, const std::map<std::string, int>& vocab) {
    Question q;
    q.scene_id = scene.scene_id;
    q.task = task;
    q.subtype = subtype;
    q.text = std::move(text);
    q.tokens = tokenize(q.text, vocab);
    q.fp = std::move(fp);
    q.answer = exec_fp(q.fp, scene);
    return q;
}

}  // namespace

std::optional<Question> gen_question(const SceneGraph& scene, Task task, Subtype subtype,
                                     RngStream& rng, double side_filter_prob,
                                     std::optional<bool> want_yes,
                                     const std::map<std::string, int>& vocab) {
    const int n = static_cast<int>(scene.objects.size());

    if (task == Task::Wh) {
        if (subtype.kind != Subtype::Query) throw Error("wh questions use query subtypes");
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (int oi : order) {
            const Object& target = scene.objects[static_cast<std::size_t>(oi)];
            const auto ref = make_ref(scene, target, subtype.attr, rng, side_filter_prob);
            if (!ref) continue;
            FunctionalProgram fp = ref_steps(*ref);
            fp.push_back(FpStep::query(subtype.attr));
            const std::string text = std::string("what is the ") + attribute_name(subtype.attr) +
                                     " of the " + ref_text(*ref) + " ?";
            return finish_question(scene, task, subtype, text, std::move(fp), vocab);
        }
        return std::nullopt;
    }

    if (subtype.kind != Subtype::Equal) throw Error("yn questions use equal subtypes");
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const bool eq = scene.objects[static_cast<std::size_t>(i)].attr(subtype.attr) ==
                            scene.objects[static_cast<std::size_t>(j)].attr(subtype.attr);
            if (!want_yes || eq == *want_yes) pairs.emplace_back(i, j);
        }
    }
    rng.shuffle(pairs);
    for (auto [i, j] : pairs) {
        if (rng.uniform() < 0.5) std::swap(i, j);
        const Object& first = scene.objects[static_cast<std::size_t>(i)];
        const Object& second = scene.objects[static_cast<std::size_t>(j)];
        const auto ref1 = make_ref(scene, first, subtype.attr, rng, side_filter_prob);
        if (!ref1) continue;
        const auto ref2 = make_ref(scene, second, subtype.attr, rng, side_filter_prob);
        if (!ref2) continue;

        std::vector<FpStep> second_steps = ref_steps(*ref2);
        FunctionalProgram fp = ref_steps(*ref1);
        fp.push_back(FpStep::equal(subtype.attr, std::move(second_steps)));
        const std::string text = std::string("does the ") + ref_text(*ref1) +
                                 " have the same " + attribute_name(subtype.attr) + " as the " +
                                 ref_text(*ref2) + " ?";
        return finish_question(scene, task, subtype, text, std::move(fp), vocab);
    }
    return std::nullopt;
}

const std::vector<Question>& TaskData::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw Error("unknown split: " + name);
}

const SceneGraph& DatasetBundle::scene(std::int64_t id) const {
    if (id < 0 || id >= static_cast<std::int64_t>(scenes.size()))
        throw Error("scene_id out of range: " + std::to_string(id));
    const SceneGraph& s = scenes[static_cast<std::size_t>(id)];
    if (s.scene_id != id) throw Error("scene table out of order at id " + std::to_string(id));
    return s;
}

DatasetBundle build_dataset(const GenConfig& config) {
    if (config.grid_size * config.grid_size < config.max_objects)
        throw Error("infeasible config: grid too small for max_objects");
    if (config.train_size % 4 != 0)
        throw Error("infeasible config: train_size must be divisible by 4 for stratification");
    if (config.train_size <= 0 || config.val_size <= 0 || config.test_size <= 0)
        throw Error("infeasible config: split sizes must be positive");

    DatasetBundle bundle;
    bundle.config = config;
    bundle.vocab = build_vocab();

    SceneConfig scfg;
    scfg.grid_size = config.grid_size;
    scfg.min_objects = config.min_objects;
    scfg.max_objects = config.max_objects;

    RngStream rng(config.seed, "datagen");
    constexpr int kMaxAttempts = 100000;

    const auto generate_split = [&](Task task, int size) {
        std::vector<Question> split;
        split.reserve(static_cast<std::size_t>(size));
        for (std::size_t ai = 0; ai < kAttributes.size(); ++ai) {
            const Attribute attr = kAttributes[ai];
            const int quota = size / 4 + (static_cast<int>(ai) < size % 4 ? 1 : 0);
            Subtype subtype;
            subtype.kind = task == Task::Wh ? Subtype::Query : Subtype::Equal;
            subtype.attr = attr;
            for (int k = 0; k < quota; ++k) {
                const std::optional<bool> want =
                    task == Task::Yn ? std::optional<bool>(k % 2 == 0) : std::nullopt;
                bool done = false;
                for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
                    SceneGraph scene =
                        gen_scene(rng, scfg, static_cast<std::int64_t>(bundle.scenes.size()));
                    auto q = gen_question(scene, task, subtype, rng, config.side_filter_prob,
                                          want, bundle.vocab);
                    if (q) {
                        q->scene_id = scene.scene_id;
                        bundle.scenes.push_back(std::move(scene));
                        split.push_back(std::move(*q));
                        done = true;
                    }
                }
                if (!done)
                    throw Error("infeasible config: could not generate " + subtype.name() +
                                " question after " + std::to_string(kMaxAttempts) + " attempts");
            }
        }
        rng.shuffle(split);
        return split;
    };

    bundle.wh.train = generate_split(Task::Wh, config.train_size);
    bundle.wh.val = generate_split(Task::Wh, config.val_size);
    bundle.wh.test = generate_split(Task::Wh, config.test_size);
    bundle.yn.train = generate_split(Task::Yn, config.train_size);
    bundle.yn.val = generate_split(Task::Yn, config.val_size);
    bundle.yn.test = generate_split(Task::Yn, config.test_size);

    std::int64_t qid = 0;
    for (TaskData* td : {&bundle.wh, &bundle.yn})
        for (auto* split : {&td->train, &td->val, &td->test})
            for (Question& q : *split) q.qid = qid++;

    return bundle;
}

SplitStats split_stats(const std::vector<Question>& split) {
    SplitStats stats;
    stats.count = static_cast<int>(split.size());
    int yes = 0, yn = 0;
    for (const Question& q : split) {
        stats.per_subtype[q.subtype.name()] += 1;
        if (q.answer == kYesLabel || q.answer == kNoLabel) {
            ++yn;
            if (q.answer == kYesLabel) ++yes;
        }
    }
    stats.yes_rate = yn > 0 ? static_cast<double>(yes) / yn : 0.0;
    return stats;
}

// ---------------------------------------------------------------------------
// JSONL wire format

namespace {

ordered_json fp_to_json(const std::vector<FpStep>& steps);

ordered_json step_to_json(const FpStep& s) {
    switch (s.op) {
        case FpOp::FilterColor:
            return {"filter_color", attribute_value_name(Attribute::Color, s.value)};
        case FpOp::FilterShape:
            return {"filter_shape", attribute_value_name(Attribute::Shape, s.value)};
        case FpOp::FilterMaterial:
            return {"filter_material", attribute_value_name(Attribute::Material, s.value)};
        case FpOp::FilterSize:
            return {"filter_size", attribute_value_name(Attribute::Size, s.value)};
        case FpOp::FilterSide:
            return {"filter_side", s.value == static_cast<int>(Side::Left) ? "left" : "right"};
        case FpOp::Unique:
            return ordered_json::array({"unique"});
        case FpOp::Query:
            return {"query", attribute_name(static_cast<Attribute>(s.value))};
        case FpOp::Equal:
            return {"equal", attribute_name(static_cast<Attribute>(s.value)),
                    fp_to_json(s.second)};
    }
    throw Error("bad fp step");
}

ordered_json fp_to_json(const std::vector<FpStep>& steps) {
    ordered_json arr = ordered_json::array();
    for (const FpStep& s : steps) arr.push_back(step_to_json(s));
    return arr;
}

std::vector<FpStep> fp_from_json(const json& arr);

FpStep step_from_json(const json& j) {
    const std::string op = j.at(0).get<std::string>();
    if (op == "unique") return FpStep::unique();
    if (op == "filter_side")
        return FpStep::filter_side(j.at(1).get<std::string>() == "left" ? Side::Left
                                                                        : Side::Right);
    if (op.rfind("filter_", 0) == 0) {
        const Attribute a = attribute_from_name(op.substr(7));
        return FpStep::filter(a, attribute_value_from_name(a, j.at(1).get<std::string>()));
    }
    if (op == "query") return FpStep::query(attribute_from_name(j.at(1).get<std::string>()));
    if (op == "equal")
        return FpStep::equal(attribute_from_name(j.at(1).get<std::string>()),
                             fp_from_json(j.at(2)));
    throw Error("unknown fp step op: " + op);
}

std::vector<FpStep> fp_from_json(const json& arr) {
    std::vector<FpStep> steps;
    for (const auto& j : arr) steps.push_back(step_from_json(j));
    return steps;
}

ordered_json scene_to_json(const SceneGraph& scene) {
    ordered_json objs = ordered_json::array();
    for (const Object& o : scene.objects) {
        objs.push_back({{"color", attribute_value_name(Attribute::Color, o.color)},
                        {"shape", attribute_value_name(Attribute::Shape, o.shape)},
                        {"material", attribute_value_name(Attribute::Material, o.material)},
                        {"size", attribute_value_name(Attribute::Size, o.size)},
                        {"row", o.row},
                        {"col", o.col}});
    }
    return {{"scene_id", scene.scene_id}, {"grid_size", scene.grid_size}, {"objects", objs}};
}

SceneGraph scene_from_json(const json& j) {
    SceneGraph scene;
    scene.scene_id = j.at("scene_id").get<std::int64_t>();
    scene.grid_size = j.at("grid_size").get<int>();
    for (const auto& jo : j.at("objects")) {
        Object o;
        o.color = attribute_value_from_name(Attribute::Color, jo.at("color").get<std::string>());
        o.shape = attribute_value_from_name(Attribute::Shape, jo.at("shape").get<std::string>());
        o.material =
            attribute_value_from_name(Attribute::Material, jo.at("material").get<std::string>());
        o.size = attribute_value_from_name(Attribute::Size, jo.at("size").get<std::string>());
        o.row = jo.at("row").get<int>();
        o.col = jo.at("col").get<int>();
        scene.objects.push_back(o);
    }
    return scene;
}

ordered_json question_to_json(const Question& q) {
    return {{"qid", q.qid},
            {"scene_id", q.scene_id},
            {"task", task_name(q.task)},
            {"subtype", q.subtype.name()},
            {"text", q.text},
            {"tokens", q.tokens},
            {"fp", fp_to_json(q.fp)},
            {"answer", label_name(q.answer)}};
}

Question question_from_json(const json& j) {
    Question q;
    q.qid = j.at("qid").get<std::int64_t>();
    q.scene_id = j.at("scene_id").get<std::int64_t>();
    q.task = task_from_name(j.at("task").get<std::string>());
    q.subtype = Subtype::from_name(j.at("subtype").get<std::string>());
    q.text = j.at("text").get<std::string>();
    q.tokens = j.at("tokens").get<std::vector<int>>();
    q.fp = fp_from_json(j.at("fp"));
    q.answer = label_from_name(j.at("answer").get<std::string>());
    return q;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ordered_json>& lines) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    for (const auto& line : lines) out << line.dump() << "\n";
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path.string());
    std::vector<json> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(path.filename().string() + ":" + std::to_string(line_no) +
                        ": malformed JSON line: " + e.what());
        }
    }
    return out;
}

}  // namespace

void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::vector<ordered_json> scene_lines;
    scene_lines.reserve(bundle.scenes.size());
    for (const SceneGraph& s : bundle.scenes) scene_lines.push_back(scene_to_json(s));
    write_jsonl(dir / "scenes.jsonl", scene_lines);

    for (Task task : {Task::Wh, Task::Yn}) {
        const TaskData& td = bundle.task(task);
        for (const auto& [split_name, split] :
             {std::pair{"train", &td.train}, {"val", &td.val}, {"test", &td.test}}) {
            std::vector<ordered_json> lines;
            lines.reserve(split->size());
            for (const Question& q : *split) lines.push_back(question_to_json(q));
            write_jsonl(dir / ("questions_" + std::string(task_name(task)) + "_" + split_name +
                               ".jsonl"),
                        lines);
        }
    }

    {
        json vocab_json(bundle.vocab);
        std::ofstream out(dir / "vocab.json", std::ios::trunc | std::ios::binary);
        out << vocab_json.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "gen_config.json", std::ios::trunc | std::ios::binary);
        out << gen_config_to_json(bundle.config) << "\n";
    }
}

DatasetBundle read_dataset(const std::filesystem::path& dir) {
    DatasetBundle bundle;
    {
        std::ifstream in(dir / "gen_config.json");
        if (!in) throw Error("missing gen_config.json in " + dir.string());
        std::stringstream buf;
        buf << in.rdbuf();
        bundle.config = gen_config_from_json(buf.str());
    }
    for (const json& j : read_jsonl(dir / "scenes.jsonl"))
        bundle.scenes.push_back(scene_from_json(j));
    for (Task task : {Task::Wh, Task::Yn}) {
        TaskData& td = task == Task::Wh ? bundle.wh : bundle.yn;
        for (const auto& [split_name, split] :
             {std::pair{"train", &td.train}, {"val", &td.val}, {"test", &td.test}}) {
            const auto path =
                dir / ("questions_" + std::string(task_name(task)) + "_" + split_name + ".jsonl");
            for (const json& j : read_jsonl(path)) split->push_back(question_from_json(j));
        }
    }
    {
        std::ifstream in(dir / "vocab.json");
        if (!in) throw Error("missing vocab.json in " + dir.string());
        json vocab_json = json::parse(in);
        for (const auto& [word, idx] : vocab_json.items())
            bundle.vocab.emplace(word, idx.get<int>());
    }
    return bundle;
}

std::string gen_config_to_json(const GenConfig& c) {
    ordered_json j;
    j["train_size"] = c.train_size;
    j["val_size"] = c.val_size;
    j["test_size"] = c.test_size;
    j["grid_size"] = c.grid_size;
    j["min_objects"] = c.min_objects;
    j["max_objects"] = c.max_objects;
    j["side_filter_prob"] = c.side_filter_prob;
    j["seed"] = c.seed;
    return j.dump(2);
}

GenConfig gen_config_from_json(const std::string& text) {
    const json j = json::parse(text);
    GenConfig c;
    c.train_size = j.value("train_size", c.train_size);
    c.val_size = j.value("val_size", c.val_size);
    c.test_size = j.value("test_size", c.test_size);
    c.grid_size = j.value("grid_size", c.grid_size);
    c.min_objects = j.value("min_objects", c.min_objects);
    c.max_objects = j.value("max_objects", c.max_objects);
    c.side_filter_prob = j.value("side_filter_prob", c.side_filter_prob);
    c.seed = j.value("seed", c.seed);
    return c;
}

std::string data_config_hash(const GenConfig& config) {
    const std::uint64_t h = fnv1a64(gen_config_to_json(config));
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

}  // namespace vqacl
