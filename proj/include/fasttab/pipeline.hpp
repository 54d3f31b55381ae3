#pragma once

#include <string>
#include <vector>

#include "fasttab/model.hpp"
#include "fasttab/structure.hpp"
#include "fasttab/types.hpp"

namespace fasttab {

struct InferenceOptions {
    bool curved = false;
    int t_override = -1;  // override the configured TRM iteration count
};

struct StageTiming {
    std::string name;
    double micros = 0;
};

struct InferenceResult {
    TableStructure structure;
    std::string html;
    GridSpec grid;
    bool has_curved = false;
    CurvedGrid curved;
    std::vector<StageTiming> timings;
    double total_micros = 0;
};

// Image -> HTML. Deterministic (dropout off, no tape); stage failures are
// rethrown with the stage name prepended.
InferenceResult infer(const TensorPtr& image, const Model& model,
                      const InferenceOptions& opt = {});

}  // namespace fasttab
