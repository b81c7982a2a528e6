#include "vqacl/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace vqacl::ad {
namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

}  // namespace

Tape::Tape() { nodes_.reserve(1024); }

NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(Tensor value) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = false;
    return push(std::move(n));
}

NodeId Tape::param(const std::string& name, const Tensor& value) {
    for (const auto& [existing, _] : params_) {
        if (existing == name) throw Error("parameter bound twice on tape: " + name);
    }
    Node n;
    n.op = Op::Leaf;
    n.value = value;
    n.value.requires_grad = true;
    n.requires_grad = true;
    const NodeId id = push(std::move(n));
    params_.emplace_back(name, id);
    return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    if (ta.same_shape(tb)) {
        n.value = ta;
        for (int i = 0; i < tb.numel(); ++i) n.value[i] += tb[i];
    } else if (ta.ndim() == 2 && tb.ndim() == 1 && ta.dim(1) == tb.dim(0)) {
        // row broadcast: [m,n] + [n]
        n.value = ta;
        const int m = ta.dim(0), cols = ta.dim(1);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < cols; ++c) n.value.at(r, c) += tb[c];
    } else {
        throw ShapeError("add: incompatible shapes " + ta.shape_str() + " and " + tb.shape_str());
    }
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require(ta.same_shape(tb),
            "mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Mul;
    n.a = a;
    n.b = b;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = ta;
    for (int i = 0; i < tb.numel(); ++i) n.value[i] *= tb[i];
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    if (ta.ndim() == 2 && tb.ndim() == 2) {
        require(ta.dim(1) == tb.dim(0), "matmul: inner dims " + ta.shape_str() + " x " + tb.shape_str());
        const int m = ta.dim(0), k = ta.dim(1), p = tb.dim(1);
        n.value = Tensor::zeros({m, p});
        for (int i = 0; i < m; ++i) {
            double* out = &n.value.data[static_cast<std::size_t>(i * p)];
            for (int kk = 0; kk < k; ++kk) {
                const double av = ta.at(i, kk);
                const double* brow = &tb.data[static_cast<std::size_t>(kk * p)];
                for (int j = 0; j < p; ++j) out[j] += av * brow[j];
            }
        }
    } else if (ta.ndim() == 2 && tb.ndim() == 1) {
        require(ta.dim(1) == tb.dim(0), "matmul: inner dims " + ta.shape_str() + " x " + tb.shape_str());
        const int m = ta.dim(0), k = ta.dim(1);
        n.value = Tensor::zeros({m});
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            const double* arow = &ta.data[static_cast<std::size_t>(i * k)];
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * tb[kk];
            n.value[i] = acc;
        }
    } else if (ta.ndim() == 1 && tb.ndim() == 2) {
        require(ta.dim(0) == tb.dim(0), "matmul: inner dims " + ta.shape_str() + " x " + tb.shape_str());
        const int k = ta.dim(0), p = tb.dim(1);
        n.value = Tensor::zeros({p});
        for (int kk = 0; kk < k; ++kk) {
            const double av = ta[kk];
            const double* brow = &tb.data[static_cast<std::size_t>(kk * p)];
            for (int j = 0; j < p; ++j) n.value[j] += av * brow[j];
        }
    } else {
        throw ShapeError("matmul: unsupported ranks " + ta.shape_str() + " x " + tb.shape_str());
    }
    return push(std::move(n));
}

NodeId Tape::concat(const std::vector<NodeId>& parts) {
    require(!parts.empty(), "concat: no inputs");
    Node n;
    n.op = Op::Concat;
    n.many = parts;
    int total = 0;
    for (NodeId p : parts) {
        const Tensor& t = node(p).value;
        require(t.ndim() <= 1, "concat: rank>1 input " + t.shape_str());
        total += t.numel();
        n.requires_grad = n.requires_grad || node(p).requires_grad;
    }
    n.value = Tensor::zeros({total});
    int off = 0;
    for (NodeId p : parts) {
        const Tensor& t = node(p).value;
        std::copy(t.data.begin(), t.data.end(), n.value.data.begin() + off);
        off += t.numel();
    }
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId x) {
    Node n;
    n.op = Op::Tanh;
    n.a = x;
    n.requires_grad = node(x).requires_grad;
    n.value = node(x).value;
    for (double& v : n.value.data) v = std::tanh(v);
    return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = x;
    n.requires_grad = node(x).requires_grad;
    n.value = node(x).value;
    for (double& v : n.value.data) {
        // stable in both tails
        v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
    Node n;
    n.op = Op::Relu;
    n.a = x;
    n.requires_grad = node(x).requires_grad;
    n.value = node(x).value;
    for (double& v : n.value.data) v = v > 0.0 ? v : 0.0;
    return push(std::move(n));
}

NodeId Tape::softmax(NodeId x) {
    const Tensor& tx = node(x).value;
    require(tx.ndim() >= 1, "softmax: needs rank >= 1, got " + tx.shape_str());
    Node n;
    n.op = Op::Softmax;
    n.a = x;
    n.requires_grad = node(x).requires_grad;
    n.value = tx;
    const int cols = tx.dim(tx.ndim() - 1);
    const int rows = tx.numel() / cols;
    for (int r = 0; r < rows; ++r) {
        double* row = &n.value.data[static_cast<std::size_t>(r * cols)];
        double mx = row[0];
        for (int c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
        double denom = 0.0;
        for (int c = 0; c < cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            denom += row[c];
        }
        for (int c = 0; c < cols; ++c) row[c] /= denom;
    }
    return push(std::move(n));
}

NodeId Tape::embedding_lookup(NodeId table, const std::vector<int>& ids) {
    const Tensor& tt = node(table).value;
    require(tt.ndim() == 2, "embedding_lookup: table must be 2-D, got " + tt.shape_str());
    const int vocab = tt.dim(0), width = tt.dim(1);
    for (int id : ids) {
        if (id < 0 || id >= vocab)
            throw Error("embedding_lookup: id " + std::to_string(id) + " outside table rows " +
                        std::to_string(vocab));
    }
    Node n;
    n.op = Op::Embedding;
    n.a = table;
    n.idx = ids;
    n.requires_grad = node(table).requires_grad;
    n.value = Tensor::zeros({static_cast<int>(ids.size()), width});
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const double* src = &tt.data[static_cast<std::size_t>(ids[r] * width)];
        std::copy(src, src + width, n.value.data.begin() + static_cast<int>(r) * width);
    }
    return push(std::move(n));
}

NodeId Tape::embedding_lookup(NodeId table, int id) {
    const NodeId full = embedding_lookup(table, std::vector<int>{id});
    Node& n = node(full);
    n.value.shape = {n.value.shape[1]};
    return full;
}

NodeId Tape::sum(NodeId x) {
    Node n;
    n.op = Op::Sum;
    n.a = x;
    n.requires_grad = node(x).requires_grad;
    double acc = 0.0;
    for (double v : node(x).value.data) acc += v;
    n.value = Tensor::scalar(acc);
    return push(std::move(n));
}

NodeId Tape::mean(NodeId x) {
    Node n;
    n.op = Op::Mean;
    n.a = x;
    n.requires_grad = node(x).requires_grad;
    double acc = 0.0;
    for (double v : node(x).value.data) acc += v;
    n.value = Tensor::scalar(acc / node(x).value.numel());
    return push(std::move(n));
}

NodeId Tape::cross_entropy(NodeId logits, int target) {
    const Tensor& tl = node(logits).value;
    require(tl.ndim() == 1, "cross_entropy: logits must be 1-D, got " + tl.shape_str());
    if (target < 0 || target >= tl.numel())
        throw Error("cross_entropy: target " + std::to_string(target) + " out of range for " +
                    std::to_string(tl.numel()) + " classes");
    Node n;
    n.op = Op::CrossEntropy;
    n.a = logits;
    n.idx = {target};
    n.requires_grad = node(logits).requires_grad;
    // -log softmax = logsumexp(x) - x[target]
    double mx = tl[0];
    for (int i = 1; i < tl.numel(); ++i) mx = std::max(mx, tl[i]);
    double denom = 0.0;
    for (int i = 0; i < tl.numel(); ++i) denom += std::exp(tl[i] - mx);
    n.value = Tensor::scalar(mx + std::log(denom) - tl[target]);
    return push(std::move(n));
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

double Tape::scalar_value(NodeId id) const {
    const Tensor& t = node(id).value;
    require(t.numel() == 1, "scalar_value: tensor has " + std::to_string(t.numel()) + " elements");
    return t.data[0];
}

void Tape::ensure_grad(Node& n) {
    if (n.grad.data.empty()) {
        n.grad.shape = n.value.shape;
        n.grad.data.assign(n.value.data.size(), 0.0);
    }
}

void Tape::accumulate(NodeId id, int flat_index, double g) {
    Node& n = node(id);
    if (!n.requires_grad) return;
    ensure_grad(n);
    n.grad.data[static_cast<std::size_t>(flat_index)] += g;
}

void Tape::backward_node(NodeId id) {
    Node& n = node(id);
    const Tensor& g = n.grad;
    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Add: {
            Node& na = node(n.a);
            Node& nb = node(n.b);
            if (na.requires_grad) {
                ensure_grad(na);
                for (int i = 0; i < g.numel(); ++i) na.grad[i] += g[i];
            }
            if (nb.requires_grad) {
                ensure_grad(nb);
                if (nb.value.same_shape(n.value)) {
                    for (int i = 0; i < g.numel(); ++i) nb.grad[i] += g[i];
                } else {
                    // row broadcast: reduce over rows
                    const int cols = nb.value.numel();
                    const int rows = g.numel() / cols;
                    for (int r = 0; r < rows; ++r)
                        for (int c = 0; c < cols; ++c) nb.grad[c] += g[r * cols + c];
                }
            }
            break;
        }
        case Op::Mul: {
            Node& na = node(n.a);
            Node& nb = node(n.b);
            if (na.requires_grad) {
                ensure_grad(na);
                for (int i = 0; i < g.numel(); ++i) na.grad[i] += g[i] * nb.value[i];
            }
            if (nb.requires_grad) {
                ensure_grad(nb);
                for (int i = 0; i < g.numel(); ++i) nb.grad[i] += g[i] * na.value[i];
            }
            break;
        }
        case Op::MatMul: {
            Node& na = node(n.a);
            Node& nb = node(n.b);
            const Tensor& A = na.value;
            const Tensor& B = nb.value;
            if (A.ndim() == 2 && B.ndim() == 2) {
                const int m = A.dim(0), k = A.dim(1), p = B.dim(1);
                if (na.requires_grad) {
                    ensure_grad(na);
                    // dA[i,k] = dot(g[i,:], B[k,:]) - both rows contiguous
                    for (int i = 0; i < m; ++i) {
                        const double* grow = &g.data[static_cast<std::size_t>(i * p)];
                        for (int kk = 0; kk < k; ++kk) {
                            const double* brow = &B.data[static_cast<std::size_t>(kk * p)];
                            double acc = 0.0;
                            for (int j = 0; j < p; ++j) acc += grow[j] * brow[j];
                            na.grad[i * k + kk] += acc;
                        }
                    }
                }
                if (nb.requires_grad) {
                    ensure_grad(nb);
                    for (int i = 0; i < m; ++i) {
                        const double* arow = &A.data[static_cast<std::size_t>(i * k)];
                        const double* grow = &g.data[static_cast<std::size_t>(i * p)];
                        for (int kk = 0; kk < k; ++kk) {
                            const double av = arow[kk];
                            if (av == 0.0) continue;
                            double* brow = &nb.grad.data[static_cast<std::size_t>(kk * p)];
                            for (int j = 0; j < p; ++j) brow[j] += av * grow[j];
                        }
                    }
                }
            } else if (A.ndim() == 2 && B.ndim() == 1) {
                const int m = A.dim(0), k = A.dim(1);
                if (na.requires_grad) {
                    ensure_grad(na);
                    for (int i = 0; i < m; ++i) {
                        const double gv = g[i];
                        if (gv == 0.0) continue;
                        for (int kk = 0; kk < k; ++kk) na.grad[i * k + kk] += gv * B[kk];
                    }
                }
                if (nb.requires_grad) {
                    ensure_grad(nb);
                    for (int i = 0; i < m; ++i) {
                        const double gv = g[i];
                        if (gv == 0.0) continue;
                        const double* arow = &A.data[static_cast<std::size_t>(i * k)];
                        for (int kk = 0; kk < k; ++kk) nb.grad[kk] += gv * arow[kk];
                    }
                }
            } else {  // [k] x [k,p]
                const int k = A.dim(0), p = B.dim(1);
                if (na.requires_grad) {
                    ensure_grad(na);
                    for (int kk = 0; kk < k; ++kk) {
                        const double* brow = &B.data[static_cast<std::size_t>(kk * p)];
                        double acc = 0.0;
                        for (int j = 0; j < p; ++j) acc += g[j] * brow[j];
                        na.grad[kk] += acc;
                    }
                }
                if (nb.requires_grad) {
                    ensure_grad(nb);
                    for (int kk = 0; kk < k; ++kk) {
                        const double av = A[kk];
                        if (av == 0.0) continue;
                        double* brow = &nb.grad.data[static_cast<std::size_t>(kk * p)];
                        for (int j = 0; j < p; ++j) brow[j] += av * g[j];
                    }
                }
            }
            break;
        }
        case Op::Concat: {
            int off = 0;
            for (NodeId p : n.many) {
                Node& np = node(p);
                const int len = np.value.numel();
                if (np.requires_grad) {
                    ensure_grad(np);
                    for (int i = 0; i < len; ++i) np.grad[i] += g[off + i];
                }
                off += len;
            }
            break;
        }
        case Op::Tanh: {
            Node& na = node(n.a);
            if (na.requires_grad) {
                ensure_grad(na);
                for (int i = 0; i < g.numel(); ++i) {
                    const double y = n.value[i];
                    na.grad[i] += g[i] * (1.0 - y * y);
                }
            }
            break;
        }
        case Op::Sigmoid: {
            Node& na = node(n.a);
            if (na.requires_grad) {
                ensure_grad(na);
                for (int i = 0; i < g.numel(); ++i) {
                    const double y = n.value[i];
                    na.grad[i] += g[i] * y * (1.0 - y);
                }
            }
            break;
        }
        case Op::Relu: {
            Node& na = node(n.a);
            if (na.requires_grad) {
                ensure_grad(na);
                for (int i = 0; i < g.numel(); ++i) {
                    if (na.value[i] > 0.0) na.grad[i] += g[i];
                }
            }
            break;
        }
        case Op::Softmax: {
            Node& na = node(n.a);
            if (na.requires_grad) {
                ensure_grad(na);
                const int cols = n.value.dim(n.value.ndim() - 1);
                const int rows = n.value.numel() / cols;
                for (int r = 0; r < rows; ++r) {
                    const double* y = &n.value.data[static_cast<std::size_t>(r * cols)];
                    const double* gy = &g.data[static_cast<std::size_t>(r * cols)];
                    double dot = 0.0;
                    for (int c = 0; c < cols; ++c) dot += gy[c] * y[c];
                    double* gx = &na.grad.data[static_cast<std::size_t>(r * cols)];
                    for (int c = 0; c < cols; ++c) gx[c] += y[c] * (gy[c] - dot);
                }
            }
            break;
        }
        case Op::Embedding: {
            Node& na = node(n.a);
            if (na.requires_grad) {
                ensure_grad(na);
                const int width = na.value.dim(1);
                for (std::size_t r = 0; r < n.idx.size(); ++r) {
                    double* dst = &na.grad.data[static_cast<std::size_t>(n.idx[r] * width)];
                    const double* src = &g.data[r * static_cast<std::size_t>(width)];
                    for (int c = 0; c < width; ++c) dst[c] += src[c];
                }
            }
            break;
        }
        case Op::Sum: {
            Node& na = node(n.a);
            if (na.requires_grad) {
                ensure_grad(na);
                const double gv = g[0];
                for (int i = 0; i < na.value.numel(); ++i) na.grad[i] += gv;
            }
            break;
        }
        case Op::Mean: {
            Node& na = node(n.a);
            if (na.requires_grad) {
                ensure_grad(na);
                const double gv = g[0] / na.value.numel();
                for (int i = 0; i < na.value.numel(); ++i) na.grad[i] += gv;
            }
            break;
        }
        case Op::CrossEntropy: {
            Node& na = node(n.a);
            if (na.requires_grad) {
                ensure_grad(na);
                const Tensor& x = na.value;
                double mx = x[0];
                for (int i = 1; i < x.numel(); ++i) mx = std::max(mx, x[i]);
                double denom = 0.0;
                for (int i = 0; i < x.numel(); ++i) denom += std::exp(x[i] - mx);
                const double gv = g[0];
                for (int i = 0; i < x.numel(); ++i) {
                    double p = std::exp(x[i] - mx) / denom;
                    if (i == n.idx[0]) p -= 1.0;
                    na.grad[i] += gv * p;
                }
            }
            break;
        }
    }
}

GradMap Tape::backward(NodeId loss) {
    Node& ln = node(loss);
    if (ln.value.numel() != 1)
        throw Error("backward: loss must be a scalar, got shape " + ln.value.shape_str());
    ensure_grad(ln);
    ln.grad.data[0] = 1.0;

    for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = node(id);
        if (!n.requires_grad || n.grad.data.empty()) continue;
        backward_node(id);
    }

    GradMap out;
    for (const auto& [name, id] : params_) {
        Node& n = node(id);
        if (n.grad.data.empty()) {
            Tensor zero = n.value;
            std::fill(zero.data.begin(), zero.data.end(), 0.0);
            zero.requires_grad = false;
            out.entries.emplace(name, std::move(zero));
        } else {
            out.entries.emplace(name, std::move(n.grad));
        }
    }
    reset();
    return out;
}

void Tape::reset() {
    nodes_.clear();
    params_.clear();
}

}  // namespace vqacl::ad
