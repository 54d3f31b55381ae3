#include "fasttab/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace fasttab {

int64_t numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

TensorPtr Tensor::create(Shape s, std::vector<double> d, bool rg) {
    if (fasttab::numel(s) != static_cast<int64_t>(d.size()))
        throw dimension_error("tensor data length " + std::to_string(d.size()) +
                              " does not match shape " + shape_str(s));
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(s);
    t->data = std::move(d);
    t->requires_grad = rg;
    return t;
}

TensorPtr Tensor::zeros(Shape s, bool rg) {
    const auto n = static_cast<size_t>(fasttab::numel(s));
    return create(std::move(s), std::vector<double>(n, 0.0), rg);
}

TensorPtr Tensor::full(Shape s, double v, bool rg) {
    const auto n = static_cast<size_t>(fasttab::numel(s));
    return create(std::move(s), std::vector<double>(n, v), rg);
}

TensorPtr Tensor::scalar(double v, bool rg) { return create({1}, {v}, rg); }

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

void backward(const TensorPtr& root) {
    if (root->numel() != 1) throw dimension_error("backward() root must be a scalar");

    // Iterative post-order topo sort (graphs can be deep: long training chains).
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Tensor* p = node->parents[idx++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn();
    }
}

}  // namespace fasttab
