#pragma once

#include "fasttab/model.hpp"
#include "fasttab/types.hpp"

namespace fasttab {

// Half the smallest base interval over both axes; the default residual bound.
double default_curve_bound(const GridSpec& base);

// Differentiable polyline decode: poly[i,k] = base_i + b*tanh(offset[i,k]),
// outer boundaries pinned to 0 and 1. offsets:[(n+1),K], base: n+1 values.
TensorPtr decode_curved_axis(const std::vector<double>& base_bounds, const TensorPtr& offsets,
                             double bound);

struct CurvedDecode {
    TensorPtr row_poly;  // [(R+1),K]
    TensorPtr col_poly;  // [(C+1),K]
};
CurvedDecode decode_curved(const GridSpec& base, const TensorPtr& row_offsets,
                           const TensorPtr& col_offsets, double bound = 0.0);

CurvedGrid curved_grid_values(const GridSpec& base, const CurvedDecode& d);

// Sum of squared second differences over every polyline row; 0 when K < 3.
TensorPtr smoothness_penalty(const TensorPtr& polys);

// Hinge^2 on pointwise ordering violations between consecutive boundaries.
TensorPtr non_crossing_penalty(const TensorPtr& polys);

// Axis-aligned bounding box of a curved cell region; feeds roi_align_1x1.
CellRect curved_cell_rect(const CurvedGrid& cg, int r, int c);

// Per-axis residual-offset head: encoded axial features resampled to K
// sample points, then a per-point linear map to (max_count+1) boundary rows.
TensorPtr curved_offsets(const TensorPtr& enc, const TensorPtr& w, const TensorPtr& b, int k);

}  // namespace fasttab
