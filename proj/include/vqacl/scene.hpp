#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vqacl/rng.hpp"
#include "vqacl/tensor.hpp"

namespace vqacl {

// Attribute domains: 8 colors, 3 shapes, 2 materials, 2 sizes.
inline constexpr std::array<const char*, 8> kColorNames = {
    "gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"};
inline constexpr std::array<const char*, 3> kShapeNames = {"cube", "sphere", "cylinder"};
inline constexpr std::array<const char*, 2> kMaterialNames = {"rubber", "metal"};
inline constexpr std::array<const char*, 2> kSizeNames = {"small", "large"};

enum class Attribute { Color, Shape, Material, Size };
inline constexpr std::array<Attribute, 4> kAttributes = {Attribute::Color, Attribute::Shape,
                                                         Attribute::Material, Attribute::Size};

const char* attribute_name(Attribute a);      // "color", "shape", ...
Attribute attribute_from_name(const std::string& name);
int attribute_cardinality(Attribute a);       // 8 / 3 / 2 / 2
const char* attribute_value_name(Attribute a, int value);
int attribute_value_from_name(Attribute a, const std::string& value);

struct Object {
    int color = 0;
    int shape = 0;
    int material = 0;
    int size = 0;
    int row = 0;
    int col = 0;

    int attr(Attribute a) const;
};

struct SceneGraph {
    std::int64_t scene_id = 0;
    int grid_size = 0;
    std::vector<Object> objects;

    // left half: col*2 < grid_size
    bool on_left(const Object& o) const { return o.col * 2 < grid_size; }
};

struct SceneConfig {
    int grid_size = 6;
    int min_objects = 3;
    int max_objects = 8;
};

// Object count uniform in [min,max], attributes uniform per domain,
// cells sampled without replacement.
SceneGraph gen_scene(RngStream& rng, const SceneConfig& config, std::int64_t scene_id);

// 16 channels per cell: [occupancy, color one-hot x8, shape x3, material x2,
// size x2]. Empty cells are all-zero. Returned flattened to [G*G, 16] with
// cell index row*G + col.
inline constexpr int kFeatureChannels = 16;
Tensor encode_features(const SceneGraph& scene);

}  // namespace vqacl
