#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qckit/tensor.hpp"

namespace qc {

enum class Precision { F64, F32 };

// Reverse-mode tape. Each op appends a node holding its output value and a
// closure that routes the node's cotangent to its parents; backward() walks
// the nodes in reverse creation order, which is topological by construction.
// Leaf gradients accumulate across backward() calls, intermediate gradients
// are rebuilt per call.
class Tape {
public:
    struct Var {
        std::int32_t id = -1;
        bool valid() const { return id >= 0; }
    };

    explicit Tape(Precision precision = Precision::F64) : precision_(precision) {}

    Precision precision() const { return precision_; }

    Var leaf(Tensor value, bool requires_grad);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    // -- primitives -----------------------------------------------------
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    Var scale(Var a, double s);
    Var matmul(Var a, Var b);
    Var add_rows(Var a, Var bias);  // (m,n) + (n), broadcast over rows
    Var add_cols(Var a, Var bias);  // (m,n) + (m), broadcast over columns
    Var tanh(Var a);
    Var softplus(Var a);
    Var relu(Var a);
    Var reduce_sum(Var a);  // -> scalar {1}
    Var reshape(Var a, Shape shape);
    Var slice(Var a, std::int64_t offset, std::int64_t len);  // flat view -> {len}
    Var gather_cols(Var a, std::vector<std::uint32_t> idx);
    Var scatter_add_cols(Var a, std::vector<std::uint32_t> idx, std::int64_t out_cols);
    // window-2^D max pooling / nearest-neighbor unpooling on lexicographic
    // grid fields of shape (C, side^grid_dim)
    Var maxpool_grid(Var a, int grid_dim, int side, int window);
    Var unpool_grid(Var a, int grid_dim, int side, int window);

    // Fused ops register through this hook; `backward` receives the tape and
    // the node itself and is responsible for accumulating parent gradients.
    Var custom(Tensor value, const std::vector<Var>& parents,
               std::function<void(Tape&, Var)> backward);

    // -- execution ------------------------------------------------------
    void backward(Var loss);
    void zero_grad();

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }
    const std::vector<double>& grad(Var v) const;
    std::vector<double>& grad_buffer(Var v);
    bool requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        bool requires_grad = false;
        bool is_leaf = false;
        std::function<void(Tape&)> backward;
    };

    std::int32_t check(Var v) const {
        if (!v.valid() || v.id >= static_cast<std::int32_t>(nodes_.size()))
            throw ContractError("variable does not belong to this tape");
        return v.id;
    }

    Var push(Tensor value, bool requires_grad, bool is_leaf, std::function<void(Tape&)> backward);
    void round_precision(Tensor& t) const;

    Precision precision_;
    std::vector<Node> nodes_;
};

}  // namespace qc
