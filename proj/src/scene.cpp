#include "vqacl/scene.hpp"

namespace vqacl {

const char* attribute_name(Attribute a) {
    switch (a) {
        case Attribute::Color: return "color";
        case Attribute::Shape: return "shape";
        case Attribute::Material: return "material";
        case Attribute::Size: return "size";
    }
    throw Error("bad attribute");
}

Attribute attribute_from_name(const std::string& name) {
    for (Attribute a : kAttributes) {
        if (name == attribute_name(a)) return a;
    }
    throw Error("unknown attribute: " + name);
}

int attribute_cardinality(Attribute a) {
    switch (a) {
        case Attribute::Color: return static_cast<int>(kColorNames.size());
        case Attribute::Shape: return static_cast<int>(kShapeNames.size());
        case Attribute::Material: return static_cast<int>(kMaterialNames.size());
        case Attribute::Size: return static_cast<int>(kSizeNames.size());
    }
    throw Error("bad attribute");
}

const char* attribute_value_name(Attribute a, int value) {
    if (value < 0 || value >= attribute_cardinality(a))
        throw Error("attribute value out of range: " + std::to_string(value));
    switch (a) {
        case Attribute::Color: return kColorNames[static_cast<std::size_t>(value)];
        case Attribute::Shape: return kShapeNames[static_cast<std::size_t>(value)];
        case Attribute::Material: return kMaterialNames[static_cast<std::size_t>(value)];
        case Attribute::Size: return kSizeNames[static_cast<std::size_t>(value)];
    }
    throw Error("bad attribute");
}

int attribute_value_from_name(Attribute a, const std::string& value) {
    for (int v = 0; v < attribute_cardinality(a); ++v) {
        if (value == attribute_value_name(a, v)) return v;
    }
    throw Error(std::string("unknown ") + attribute_name(a) + " value: " + value);
}

int Object::attr(Attribute a) const {
    switch (a) {
        case Attribute::Color: return color;
        case Attribute::Shape: return shape;
        case Attribute::Material: return material;
        case Attribute::Size: return size;
    }
    throw Error("bad attribute");
}

SceneGraph gen_scene(RngStream& rng, const SceneConfig& config, std::int64_t scene_id) {
    if (config.grid_size * config.grid_size < config.max_objects)
        throw Error("scene config infeasible: grid " + std::to_string(config.grid_size) +
                    "^2 cells < max_objects " + std::to_string(config.max_objects));
    if (config.min_objects < 1 || config.min_objects > config.max_objects)
        throw Error("scene config infeasible: bad object count range");

    SceneGraph scene;
    scene.scene_id = scene_id;
    scene.grid_size = config.grid_size;
    const int count =
        config.min_objects +
        static_cast<int>(rng.uniform_int(config.max_objects - config.min_objects + 1));
    const std::vector<int> cells =
        rng.sample_without_replacement(config.grid_size * config.grid_size, count);
    scene.objects.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Object o;
        o.color = static_cast<int>(rng.uniform_int(attribute_cardinality(Attribute::Color)));
        o.shape = static_cast<int>(rng.uniform_int(attribute_cardinality(Attribute::Shape)));
        o.material = static_cast<int>(rng.uniform_int(attribute_cardinality(Attribute::Material)));
        o.size = static_cast<int>(rng.uniform_int(attribute_cardinality(Attribute::Size)));
        o.row = cells[static_cast<std::size_t>(i)] / config.grid_size;
        o.col = cells[static_cast<std::size_t>(i)] % config.grid_size;
        scene.objects.push_back(o);
    }
    return scene;
}

Tensor encode_features(const SceneGraph& scene) {
    const int g = scene.grid_size;
    Tensor grid = Tensor::zeros({g * g, kFeatureChannels});
    for (const Object& o : scene.objects) {
        double* cell = &grid.data[static_cast<std::size_t>((o.row * g + o.col) * kFeatureChannels)];
        cell[0] = 1.0;
        cell[1 + o.color] = 1.0;
        cell[9 + o.shape] = 1.0;
        cell[12 + o.material] = 1.0;
        cell[14 + o.size] = 1.0;
    }
    return grid;
}

}  // namespace vqacl
