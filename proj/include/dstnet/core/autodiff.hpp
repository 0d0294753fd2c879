#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "dstnet/core/tensor.hpp"

namespace dstnet {

namespace ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the dynamic computation graph. `backward_fn` reads this
/// node's grad and accumulates into the parents' grads; saved context lives
/// in its closure. Nodes are created in topological order (seq increases).
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::uint64_t seq = 0;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward_fn;
};

/// Adds `delta` into `g`, allocating `g` on first touch.
void accumulate(Tensor& g, const Tensor& delta);

bool grad_enabled();

/// Scoped switch that disables graph construction (inference mode).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

}  // namespace ad

/// Handle to a graph node. Copies share the node.
class Var {
public:
    Var() = default;

    static Var leaf(Tensor value, bool requires_grad = false);

    /// Op constructor: wires parents and the backward closure. The closure is
    /// dropped when grads are disabled or no parent needs them.
    static Var make(Tensor value, std::vector<Var> parents,
                    std::function<void(ad::Node&)> backward_fn);

    bool defined() const { return static_cast<bool>(n_); }
    const Tensor& val() const { return n_->value; }
    Tensor& value() { return n_->value; }
    const Tensor& grad() const { return n_->grad; }
    bool has_grad() const { return n_ && n_->grad.defined(); }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    void clear_grad() {
        if (n_) n_->grad = Tensor();
    }
    ad::NodePtr node() const { return n_; }

private:
    ad::NodePtr n_;
};

/// Reverse pass from a scalar root (numel == 1). Leaf grads accumulate; call
/// clear_grad between steps.
void backward(const Var& root);

}  // namespace dstnet
