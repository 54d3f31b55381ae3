#pragma once

#include "fasttab/model.hpp"
#include "fasttab/types.hpp"

namespace fasttab {

// Rectangles of consecutive boundaries; they partition [0,1]^2 exactly.
std::vector<CellRect> grid_cells(const GridSpec& g);

// Span-head MLP over pooled cell features U:[N,d_model].
struct SpanLogits {
    TensorPtr rs;  // [N, RS_max]
    TensorPtr cs;  // [N, CS_max]
};
SpanLogits span_head(const TensorPtr& u, const ModelConfig& cfg, const ParamStore& ps,
                     bool training, Rng* rng);

// Row-major conflict resolution of argmax span predictions into a tiling
// SpanGrid: clip to grid edges, shrink colspan first then rowspan to dodge
// already claimed cells; claimed predictions are ignored.
SpanGrid resolve_spans(const std::vector<int>& rs_pred, const std::vector<int>& cs_pred,
                       int r, int c);

}  // namespace fasttab
