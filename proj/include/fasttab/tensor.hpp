#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fasttab/common.hpp"

namespace fasttab {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major tensor doubling as a node on the reverse-mode tape.
// Leaves created with requires_grad=true receive gradients; intermediate
// nodes record their parents and a backward closure when grad mode is on.
struct Tensor : std::enable_shared_from_this<Tensor> {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // empty until touched by backward()

    std::vector<TensorPtr> parents;
    std::function<void()> backward_fn;

    int64_t numel() const { return static_cast<int64_t>(data.size()); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    }

    static TensorPtr create(Shape s, std::vector<double> d, bool rg = false);
    static TensorPtr zeros(Shape s, bool rg = false);
    static TensorPtr full(Shape s, double v, bool rg = false);
    static TensorPtr scalar(double v, bool rg = false);

    double item() const {
        if (data.size() != 1) throw dimension_error("item() on non-scalar tensor of shape " + shape_str(shape));
        return data[0];
    }
};

// Scoped switch for tape recording. Inference paths disable recording so
// no graph is retained.
bool grad_enabled();
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    bool prev;
};

// Reverse-mode replay from a scalar root in topological order.
void backward(const TensorPtr& root);

}  // namespace fasttab
