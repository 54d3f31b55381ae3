#pragma once

#include "fasttab/model.hpp"
#include "fasttab/types.hpp"

namespace fasttab {

// g[c] = mean over spatial positions of channel c.
TensorPtr global_pool(const FeatureMap& f);

// z(0)=z0; z(t+1) = z(t) + Wout GELU(Win [LN(z(t)), g]); bias-free update.
TensorPtr trm_refine(const TensorPtr& g, const ModelConfig& cfg, const ParamStore& ps,
                     int t_override = -1);

}  // namespace fasttab
