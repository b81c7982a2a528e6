#include "vqacl/tensor.hpp"

#include <cmath>

namespace vqacl {

int shape_numel(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor Tensor::zeros(std::vector<int> shape) {
    for (int d : shape) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_to_string(shape));
    }
    Tensor t;
    t.data.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0);
    t.shape = std::move(shape);
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data = {v};
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
    if (static_cast<std::size_t>(shape_numel(shape)) != values.size()) {
        throw ShapeError("data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_to_string(shape));
    }
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::move(values);
    return t;
}

int Tensor::numel() const { return static_cast<int>(data.size()); }

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

}  // namespace vqacl
