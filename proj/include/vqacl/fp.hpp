#pragma once

#include <string>
#include <vector>

#include "vqacl/scene.hpp"

namespace vqacl {

// Single answer space over both tasks, in documented order:
// 8 colors, 3 shapes, 2 materials, 2 sizes, yes, no.
inline constexpr int kWhLabelCount = 15;
inline constexpr int kLabelCount = 17;
inline constexpr int kYesLabel = 15;
inline constexpr int kNoLabel = 16;

const std::string& label_name(int label);
int label_from_name(const std::string& name);
int label_of_attribute(Attribute a, int value);

enum class Task { Wh, Yn };
const char* task_name(Task t);  // "wh" / "yn"
Task task_from_name(const std::string& name);
Task task_of_label(int label);

enum class HeadKind { Single, WhOnly, YnOnly };

// Maps between the 17-label single-head space and the per-task head spaces
// (15 attribute values / {yes,no}).
struct LabelSpace {
    HeadKind kind = HeadKind::Single;

    int size() const;
    int to_head(int single_label) const;
    int to_single(int head_index) const;
    bool contains(int single_label) const;
};

enum class Side { Left, Right };

enum class FpOp {
    FilterColor,
    FilterShape,
    FilterMaterial,
    FilterSize,
    FilterSide,
    Unique,
    Query,
    Equal,
};

struct FpStep {
    FpOp op;
    int value = -1;             // attribute value, Side, or Attribute (Query/Equal)
    std::vector<FpStep> second; // Equal only: second referent's filter+unique steps

    static FpStep filter(Attribute a, int value);
    static FpStep filter_side(Side s);
    static FpStep unique();
    static FpStep query(Attribute a);
    static FpStep equal(Attribute a, std::vector<FpStep> second_referent);
};

using FunctionalProgram = std::vector<FpStep>;

class AmbiguousReferentError : public Error {
  public:
    explicit AmbiguousReferentError(const std::string& msg) : Error(msg) {}
};

// Runs the program against the scene and returns the single-head label.
// `unique` over a set that is not a singleton throws AmbiguousReferentError.
int exec_fp(const FunctionalProgram& fp, const SceneGraph& scene);

}  // namespace vqacl
