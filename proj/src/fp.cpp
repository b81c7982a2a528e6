#include "vqacl/fp.hpp"

#include <array>

namespace vqacl {
namespace {

const std::array<std::string, kLabelCount>& label_table() {
    static const std::array<std::string, kLabelCount> table = [] {
        std::array<std::string, kLabelCount> t;
        int i = 0;
        for (const char* c : kColorNames) t[static_cast<std::size_t>(i++)] = c;
        for (const char* s : kShapeNames) t[static_cast<std::size_t>(i++)] = s;
        for (const char* m : kMaterialNames) t[static_cast<std::size_t>(i++)] = m;
        for (const char* s : kSizeNames) t[static_cast<std::size_t>(i++)] = s;
        t[static_cast<std::size_t>(i++)] = "yes";
        t[static_cast<std::size_t>(i++)] = "no";
        return t;
    }();
    return table;
}

}  // namespace

const std::string& label_name(int label) {
    if (label < 0 || label >= kLabelCount)
        throw Error("label index out of range: " + std::to_string(label));
    return label_table()[static_cast<std::size_t>(label)];
}

int label_from_name(const std::string& name) {
    const auto& table = label_table();
    for (int i = 0; i < kLabelCount; ++i) {
        if (table[static_cast<std::size_t>(i)] == name) return i;
    }
    throw Error("unknown label: " + name);
}

int label_of_attribute(Attribute a, int value) {
    if (value < 0 || value >= attribute_cardinality(a))
        throw Error("attribute value out of range");
    switch (a) {
        case Attribute::Color: return value;
        case Attribute::Shape: return 8 + value;
        case Attribute::Material: return 11 + value;
        case Attribute::Size: return 13 + value;
    }
    throw Error("bad attribute");
}

const char* task_name(Task t) { return t == Task::Wh ? "wh" : "yn"; }

Task task_from_name(const std::string& name) {
    if (name == "wh") return Task::Wh;
    if (name == "yn") return Task::Yn;
    throw Error("unknown task: " + name);
}

Task task_of_label(int label) {
    if (label < 0 || label >= kLabelCount)
        throw Error("label index out of range: " + std::to_string(label));
    return label < kWhLabelCount ? Task::Wh : Task::Yn;
}

int LabelSpace::size() const {
    switch (kind) {
        case HeadKind::Single: return kLabelCount;
        case HeadKind::WhOnly: return kWhLabelCount;
        case HeadKind::YnOnly: return 2;
    }
    throw Error("bad head kind");
}

bool LabelSpace::contains(int single_label) const {
    if (single_label < 0 || single_label >= kLabelCount) return false;
    switch (kind) {
        case HeadKind::Single: return true;
        case HeadKind::WhOnly: return single_label < kWhLabelCount;
        case HeadKind::YnOnly: return single_label >= kWhLabelCount;
    }
    throw Error("bad head kind");
}

int LabelSpace::to_head(int single_label) const {
    if (!contains(single_label))
        throw Error("label " + std::to_string(single_label) + " outside head space");
    return kind == HeadKind::YnOnly ? single_label - kWhLabelCount : single_label;
}

int LabelSpace::to_single(int head_index) const {
    if (head_index < 0 || head_index >= size())
        throw Error("head index out of range: " + std::to_string(head_index));
    return kind == HeadKind::YnOnly ? head_index + kWhLabelCount : head_index;
}

FpStep FpStep::filter(Attribute a, int value) {
    FpStep s;
    switch (a) {
        case Attribute::Color: s.op = FpOp::FilterColor; break;
        case Attribute::Shape: s.op = FpOp::FilterShape; break;
        case Attribute::Material: s.op = FpOp::FilterMaterial; break;
        case Attribute::Size: s.op = FpOp::FilterSize; break;
    }
    s.value = value;
    return s;
}

FpStep FpStep::filter_side(Side side) {
    FpStep s;
    s.op = FpOp::FilterSide;
    s.value = static_cast<int>(side);
    return s;
}

FpStep FpStep::unique() {
    FpStep s;
    s.op = FpOp::Unique;
    return s;
}

FpStep FpStep::query(Attribute a) {
    FpStep s;
    s.op = FpOp::Query;
    s.value = static_cast<int>(a);
    return s;
}

FpStep FpStep::equal(Attribute a, std::vector<FpStep> second_referent) {
    FpStep s;
    s.op = FpOp::Equal;
    s.value = static_cast<int>(a);
    s.second = std::move(second_referent);
    return s;
}

namespace {

// Executes filter+unique steps and returns the surviving object.
const Object* resolve(const std::vector<FpStep>& steps, std::size_t begin, std::size_t end,
                      const SceneGraph& scene) {
    std::vector<const Object*> set;
    set.reserve(scene.objects.size());
    for (const Object& o : scene.objects) set.push_back(&o);

    for (std::size_t i = begin; i < end; ++i) {
        const FpStep& step = steps[i];
        if (step.op == FpOp::Unique) {
            if (set.size() != 1)
                throw AmbiguousReferentError("unique over set of size " +
                                             std::to_string(set.size()));
            return set[0];
        }
        std::vector<const Object*> kept;
        kept.reserve(set.size());
        switch (step.op) {
            case FpOp::FilterColor:
                for (const Object* o : set)
                    if (o->color == step.value) kept.push_back(o);
                break;
            case FpOp::FilterShape:
                for (const Object* o : set)
                    if (o->shape == step.value) kept.push_back(o);
                break;
            case FpOp::FilterMaterial:
                for (const Object* o : set)
                    if (o->material == step.value) kept.push_back(o);
                break;
            case FpOp::FilterSize:
                for (const Object* o : set)
                    if (o->size == step.value) kept.push_back(o);
                break;
            case FpOp::FilterSide: {
                const bool want_left = step.value == static_cast<int>(Side::Left);
                for (const Object* o : set)
                    if (scene.on_left(*o) == want_left) kept.push_back(o);
                break;
            }
            default:
                throw Error("misplaced step in referent position");
        }
        set = std::move(kept);
    }
    throw Error("referent steps did not end in unique");
}

}  // namespace

int exec_fp(const FunctionalProgram& fp, const SceneGraph& scene) {
    if (fp.empty()) throw Error("empty functional program");
    const FpStep& terminal = fp.back();
    const Object* first = resolve(fp, 0, fp.size() - 1, scene);

    if (terminal.op == FpOp::Query) {
        const Attribute a = static_cast<Attribute>(terminal.value);
        return label_of_attribute(a, first->attr(a));
    }
    if (terminal.op == FpOp::Equal) {
        const Attribute a = static_cast<Attribute>(terminal.value);
        const Object* second = resolve(terminal.second, 0, terminal.second.size(), scene);
        return first->attr(a) == second->attr(a) ? kYesLabel : kNoLabel;
    }
    throw Error("program must end in query or equal");
}

}  // namespace vqacl
