#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "pit/tensor.hpp"

namespace pit {

// Reverse-mode autodiff over Tensor2. Operations append nodes to the tape;
// backward() replays the recorded closures in reverse creation order (a valid
// topological order, since parents are always created before children) and
// finally accumulates leaf gradients into their owning Params.
//
// One tape per forward pass. A Param leafed several times maps to a single
// node, so gradients from all uses accumulate on that node.
//
// All public operations keep outputs finite or throw; score matrices built
// for masked attention may carry -inf entries, which softmax_rows treats as
// excluded support.
class Tape {
public:
    using NodeId = int;

    explicit Tape(bool track_gradients = true) : track_(track_gradients) {}

    NodeId constant(Tensor2 v);
    NodeId leaf(Param& p);

    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);  // Hadamard
    NodeId div(NodeId a, NodeId b);
    // Broadcast a 1xC bias row over every row of m.
    NodeId add_rowvec(NodeId m, NodeId bias);
    NodeId scale(NodeId a, double c);
    // m scaled by a 1x1 node; gradient flows to both.
    NodeId scalar_mul(NodeId m, NodeId s);
    NodeId softmax_rows(NodeId a);
    NodeId gelu(NodeId a);
    NodeId tan_elem(NodeId a);
    NodeId sqrt_elem(NodeId a);
    NodeId abs_elem(NodeId a);
    NodeId sum_all(NodeId a);  // 1x1
    NodeId concat_cols(const std::vector<NodeId>& parts);

    // Composite: m * W + bias broadcast row-wise.
    NodeId linear(NodeId m, Param& w, Param& b);

    const Tensor2& value(NodeId id) const { return nodes_[id].value; }
    const Tensor2& grad(NodeId id) const;
    bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }

    // loss must be 1x1. Populates Param::grad for every reachable leaf
    // (adding to whatever is already accumulated there).
    void backward(NodeId loss);

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor2 value;
        Tensor2 grad;
        bool requires_grad = false;
        Param* param = nullptr;
        std::function<void(Tape&)> back;
    };

    NodeId push(Tensor2 value, bool requires_grad);
    Tensor2& grad_mut(NodeId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
    std::unordered_map<const Param*, NodeId> leaf_ids_;
    bool track_ = true;
};

// In-place accumulating matmul kernels used by forward and backward passes.
// Fixed loop order keeps reductions deterministic.
void mm_nn(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate);
void mm_nt(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate);  // a * b^T
void mm_tn(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate);  // a^T * b

}  // namespace pit
