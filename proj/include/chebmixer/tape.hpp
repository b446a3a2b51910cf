#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "chebmixer/graph.hpp"
#include "chebmixer/tensor.hpp"

namespace chebmixer {

/// Handle to a value recorded on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

enum class HopReduceMode { Sum, Mean, Max };

/// Ordered record of executed differentiable operations. The reverse pass
/// visits operations in exact reverse execution order and accumulates
/// gradients additively in that fixed order, so replaying an identical tape
/// yields bitwise-identical gradients. Single-owner: do not mutate one tape
/// from two threads.
class Tape {
public:
    Var leaf(Tensor value, bool requires_grad = false);

    /// Standard matrix product, differentiable in both operands.
    Var matmul(Var a, Var b);
    /// x * w^T + bias, with w stored (out x in); bias optional.
    Var linear(Var x, Var w, Var bias = {});
    Var add(Var a, Var b);
    /// Normalizes over the last axis of a 2-D or 3-D operand.
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
    Var gelu(Var x);
    /// OUT[b] = w * x[b] (+ bias broadcast along the middle axis).
    Var batched_lmul(Var w, Var x, Var bias = {});
    /// OUT[b] = x[b] * w^T (+ bias broadcast along the last axis).
    Var batched_rmul_t(Var x, Var w, Var bias = {});
    /// Chebyshev hop stack: slice 0 is x, slice 1 is L*x, then the
    /// 2*L*prev - prev2 recurrence. Differentiable w.r.t. x (the operator is
    /// a constant).
    Var cheb_hops(std::shared_ptr<const SparseLaplacian> lap, Var x, int k_order);
    /// OUT[n][c] = sum_k w[k][c] * xg[n][k][c]; w may be (K+1) x 1 for
    /// channel-shared weights.
    Var aggregate(Var xg, Var w);
    Var hop_reduce(Var xg, HopReduceMode mode);
    /// Mean over masked rows of -log softmax(logits)[label].
    Var cross_entropy(Var logits, std::vector<int64_t> labels, std::vector<int64_t> mask);
    Var sum_all(Var x);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const;
    size_t size() const { return nodes_.size(); }

    /// Reverse pass from a scalar seed. Leaf gradients stay available through
    /// grad(); intermediate gradient buffers are freed as the sweep passes
    /// them.
    void backward(Var seed);
    const Tensor& grad(Var v) const;

private:
    enum class Op {
        Leaf,
        MatMul,
        Linear,
        Add,
        LayerNorm,
        Gelu,
        BatchedLmul,
        BatchedRmulT,
        ChebHops,
        Aggregate,
        HopReduce,
        CrossEntropy,
        SumAll,
    };

    struct Node {
        Op op = Op::Leaf;
        std::array<int, 3> in{{-1, -1, -1}};
        Tensor value;
        bool requires_grad = false;
        bool is_leaf = false;
        Tensor aux_a;  // layer_norm mean | cross_entropy probs
        Tensor aux_b;  // layer_norm invstd
        std::vector<int64_t> idx;  // hop_reduce argmax
        std::vector<int64_t> labels;
        std::vector<int64_t> mask;
        std::shared_ptr<const SparseLaplacian> lap;
        int k_order = 0;
        HopReduceMode mode = HopReduceMode::Sum;
        double eps = 0.0;
    };

    int push(Node node);
    const Node& node(Var v) const;
    Tensor& grad_buf(int id, const Tensor& like);
    void backward_node(int id);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

}  // namespace chebmixer
