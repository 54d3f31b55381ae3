#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fasttab/rng.hpp"
#include "fasttab/tensor.hpp"

namespace fasttab {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    int64_t worst_index = -1;
    int64_t checked = 0;
};

struct NamedParam {
    std::string name;
    TensorPtr tensor;
};

// Central-difference check of reverse-mode gradients for a scalar-valued
// function of the given parameters. When max_coords_per_tensor > 0 only a
// random coordinate subset per tensor is probed (seeded, reproducible).
GradCheckReport grad_check(const std::function<TensorPtr()>& f,
                           const std::vector<NamedParam>& params,
                           double eps = 1e-5,
                           int64_t max_coords_per_tensor = 0,
                           uint64_t seed = 0);

}  // namespace fasttab
