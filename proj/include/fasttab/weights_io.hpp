#pragma once

#include <string>

#include "fasttab/model.hpp"

namespace fasttab {

// Single-line JSON manifest {format_version, config, tensors:[{name, shape,
// offset, dtype}]} followed by '\n' and a raw little-endian float64 blob in
// manifest order. Round trips bit-exactly.
void save_weights(const std::string& path, const Model& model);
Model load_weights(const std::string& path);

}  // namespace fasttab
