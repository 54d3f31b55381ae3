#pragma once

#include "fasttab/model.hpp"
#include "fasttab/types.hpp"

namespace fasttab {

// Fully-convolutional encoder with anisotropic strides (x16 along height,
// x8 along width). Inputs smaller than one stride block are rejected;
// non-divisible inputs are padded right/bottom with white (1.0).
FeatureMap encode(const TensorPtr& image, const ModelConfig& cfg, const ParamStore& ps);

}  // namespace fasttab
