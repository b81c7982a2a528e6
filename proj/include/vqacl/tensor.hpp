#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqacl {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
  public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Dense row-major tensor of doubles. Rank 0 (empty shape) is a scalar with
// one element; only ranks 0..2 are used by the model.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    bool requires_grad = false;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape);
    static Tensor scalar(double v);
    static Tensor from(std::vector<int> shape, std::vector<double> values);

    int numel() const;
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    double& operator[](int i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return data[static_cast<std::size_t>(i)]; }
    // 2-D access
    double& at(int r, int c) { return data[static_cast<std::size_t>(r * shape[1] + c)]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r * shape[1] + c)]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    std::string shape_str() const;
};

int shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace vqacl
