#include "dstnet/core/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <unordered_set>

namespace dstnet {

namespace ad {

namespace {
std::atomic<std::uint64_t> g_seq{1};
thread_local bool g_grad_enabled = true;
}  // namespace

void accumulate(Tensor& g, const Tensor& delta) {
    if (!g.defined()) {
        g = delta;
        return;
    }
    g.add_(delta);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

}  // namespace ad

Var Var::leaf(Tensor value, bool requires_grad) {
    Var v;
    v.n_ = std::make_shared<ad::Node>();
    v.n_->value = std::move(value);
    v.n_->requires_grad = requires_grad && ad::grad_enabled();
    v.n_->seq = ad::g_seq.fetch_add(1, std::memory_order_relaxed);
    return v;
}

Var Var::make(Tensor value, std::vector<Var> parents,
              std::function<void(ad::Node&)> backward_fn) {
    Var v;
    v.n_ = std::make_shared<ad::Node>();
    v.n_->value = std::move(value);
    v.n_->seq = ad::g_seq.fetch_add(1, std::memory_order_relaxed);
    bool needs = false;
    if (ad::grad_enabled()) {
        for (const Var& p : parents)
            if (p.defined() && p.requires_grad()) needs = true;
    }
    if (needs) {
        v.n_->requires_grad = true;
        v.n_->parents.reserve(parents.size());
        for (const Var& p : parents) v.n_->parents.push_back(p.node());
        v.n_->backward_fn = std::move(backward_fn);
    }
    return v;
}

void backward(const Var& root) {
    if (!root.defined()) throw std::invalid_argument("backward on undefined Var");
    if (root.val().numel() != 1) throw std::invalid_argument("backward root must be scalar");
    if (!root.requires_grad()) return;

    // Collect the reachable grad-requiring subgraph.
    std::vector<ad::Node*> order;
    std::unordered_set<ad::Node*> seen;
    std::vector<ad::Node*> stack{root.node().get()};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        ad::Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }
    std::sort(order.begin(), order.end(),
              [](const ad::Node* a, const ad::Node* b) { return a->seq > b->seq; });

    ad::accumulate(root.node()->grad, Tensor::scalar(1.0));
    for (ad::Node* n : order) {
        if (n->backward_fn && n->grad.defined()) n->backward_fn(*n);
    }
}

}  // namespace dstnet
