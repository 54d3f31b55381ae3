#include "fasttab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fasttab/common.hpp"

namespace fasttab {

GradCheckReport grad_check(const std::function<TensorPtr()>& f,
                           const std::vector<NamedParam>& params,
                           double eps, int64_t max_coords_per_tensor, uint64_t seed) {
    for (const auto& p : params) p.tensor->zero_grad();

    auto loss = f();
    if (!std::isfinite(loss->item()))
        throw numeric_error("grad_check: non-finite loss value");
    backward(loss);

    GradCheckReport rep;
    Rng rng(seed ^ 0x5ca1ab1eULL);
    for (const auto& p : params) {
        auto& t = *p.tensor;
        const int64_t n = t.numel();
        std::vector<int64_t> coords;
        if (max_coords_per_tensor > 0 && n > max_coords_per_tensor) {
            for (int64_t i = 0; i < max_coords_per_tensor; ++i)
                coords.push_back(static_cast<int64_t>(rng.randint(static_cast<uint64_t>(n))));
            std::sort(coords.begin(), coords.end());
            coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        } else {
            coords.resize(n);
            for (int64_t i = 0; i < n; ++i) coords[i] = i;
        }
        for (int64_t i : coords) {
            const double orig = t.data[i];
            t.data[i] = orig + eps;
            const double fp = f()->item();
            t.data[i] = orig - eps;
            const double fm = f()->item();
            t.data[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw numeric_error("grad_check: non-finite f at " + p.name + "[" +
                                    std::to_string(i) + "]");
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = t.grad.empty() ? 0.0 : t.grad[i];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            const double rel = std::abs(numeric - analytic) / denom;
            ++rep.checked;
            if (rel > rep.max_rel_error) {
                rep.max_rel_error = rel;
                rep.worst_param = p.name;
                rep.worst_index = i;
            }
        }
    }
    return rep;
}

}  // namespace fasttab
