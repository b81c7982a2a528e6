#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqacl/fp.hpp"
#include "vqacl/scene.hpp"

namespace vqacl {

struct Subtype {
    enum Kind { Query, Equal } kind = Query;
    Attribute attr = Attribute::Color;

    std::string name() const;  // "query_color" ... "equal_size"
    static Subtype from_name(const std::string& name);
    bool operator==(const Subtype& other) const {
        return kind == other.kind && attr == other.attr;
    }
};

struct Question {
    std::int64_t qid = 0;
    std::int64_t scene_id = 0;
    Task task = Task::Wh;
    Subtype subtype;
    std::string text;
    std::vector<int> tokens;
    FunctionalProgram fp;
    int answer = 0;  // single-head label index
};

// Closed template vocabulary: every word any generated question can contain,
// plus all 17 answer words. Indices are alphabetical and config-independent.
std::map<std::string, int> build_vocab();
std::vector<int> tokenize(const std::string& text, const std::map<std::string, int>& vocab);
std::string detokenize(const std::vector<int>& tokens, const std::map<std::string, int>& vocab);

struct GenConfig {
    int train_size = 8000;
    int val_size = 2000;
    int test_size = 2000;
    int grid_size = 6;
    int min_objects = 3;
    int max_objects = 8;
    double side_filter_prob = 0.15;
    std::uint64_t seed = 1234;
};

struct TaskData {
    std::vector<Question> train;
    std::vector<Question> val;
    std::vector<Question> test;

    const std::vector<Question>& split(const std::string& name) const;
};

struct DatasetBundle {
    GenConfig config;
    std::vector<SceneGraph> scenes;  // scene_id == index
    TaskData wh;
    TaskData yn;
    std::map<std::string, int> vocab;

    const SceneGraph& scene(std::int64_t id) const;
    const TaskData& task(Task t) const { return t == Task::Wh ? wh : yn; }
};

// Builds one question of the given subtype about `scene`, with a referring
// expression of 1-3 attributes and an optional left/right-half filter.
// For Yn subtypes `want_yes` fixes the desired answer. Returns nullopt when
// the scene cannot support the request (caller resamples the scene).
std::optional<Question> gen_question(const SceneGraph& scene, Task task, Subtype subtype,
                                     RngStream& rng, double side_filter_prob,
                                     std::optional<bool> want_yes,
                                     const std::map<std::string, int>& vocab);

// Both tasks, scene-disjoint splits, train strata exactly equal over the four
// attributes, Yn answers balanced. Deterministic per seed.
DatasetBundle build_dataset(const GenConfig& config);

// enforced by build_dataset; exposed for tests and gen-data stats
struct SplitStats {
    int count = 0;
    double yes_rate = 0.0;                 // Yn splits only
    std::map<std::string, int> per_subtype;
};
SplitStats split_stats(const std::vector<Question>& split);

// JSONL round trip. Layout under `dir`: scenes.jsonl,
// questions_<task>_<split>.jsonl, vocab.json, gen_config.json.
void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle read_dataset(const std::filesystem::path& dir);

// canonical serialization of the generation config (also hashed into
// artifact metadata)
std::string gen_config_to_json(const GenConfig& config);
GenConfig gen_config_from_json(const std::string& text);
std::string data_config_hash(const GenConfig& config);

}  // namespace vqacl
