#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vqacl/tensor.hpp"

namespace vqacl {

// Gradient of a loss with respect to named parameters; shapes mirror the
// parameters they belong to.
struct GradMap {
    std::map<std::string, Tensor> entries;

    bool contains(const std::string& name) const { return entries.count(name) != 0; }
    const Tensor& at(const std::string& name) const { return entries.at(name); }
};

namespace ad {

using NodeId = std::int32_t;

// Reverse-mode tape over dense tensors. Nodes are created in topological
// order by construction; backward walks them in reverse. One tape per batch:
// backward() hands out the parameter gradients and clears the tape.
class Tape {
  public:
    Tape();

    // constant input, no gradient tracking
    NodeId leaf(Tensor value);
    // trainable leaf registered under `name`; appears in the GradMap
    NodeId param(const std::string& name, const Tensor& value);

    NodeId add(NodeId a, NodeId b);  // same shape, or [m,n] + [n] row broadcast
    NodeId mul(NodeId a, NodeId b);  // elementwise, same shape
    NodeId matmul(NodeId a, NodeId b);  // [m,k]x[k,n], [m,k]x[k], [k]x[k,n]
    NodeId concat(const std::vector<NodeId>& parts);  // rank<=1 parts -> 1-D
    NodeId tanh(NodeId x);
    NodeId sigmoid(NodeId x);
    NodeId relu(NodeId x);
    NodeId softmax(NodeId x);  // over last axis, log-sum-exp safe
    NodeId embedding_lookup(NodeId table, const std::vector<int>& ids);  // [T,E]
    NodeId embedding_lookup(NodeId table, int id);                       // [E]
    NodeId sum(NodeId x);   // scalar
    NodeId mean(NodeId x);  // scalar
    // -log softmax(logits)[target]; logits must be 1-D
    NodeId cross_entropy(NodeId logits, int target);

    const Tensor& value(NodeId id) const;
    double scalar_value(NodeId id) const;

    // Seeds d(loss)=1, accumulates into every reachable trainable leaf and
    // returns gradients for all registered params (zeros when disconnected).
    // The tape is cleared afterwards.
    GradMap backward(NodeId loss);

    void reset();
    std::size_t size() const { return nodes_.size(); }

  private:
    enum class Op : std::uint8_t {
        Leaf,
        Add,
        Mul,
        MatMul,
        Concat,
        Tanh,
        Sigmoid,
        Relu,
        Softmax,
        Embedding,
        Sum,
        Mean,
        CrossEntropy,
    };

    struct Node {
        Op op = Op::Leaf;
        Tensor value;
        Tensor grad;  // allocated on first touch during backward
        bool requires_grad = false;
        NodeId a = -1;
        NodeId b = -1;
        std::vector<NodeId> many;  // concat inputs
        std::vector<int> idx;      // embedding ids / cross-entropy target
    };

    NodeId push(Node n);
    Node& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
    void ensure_grad(Node& n);
    void accumulate(NodeId id, int flat_index, double g);
    void backward_node(NodeId id);

    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, NodeId>> params_;
};

}  // namespace ad
}  // namespace vqacl
