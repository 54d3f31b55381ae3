#pragma once

#include "fasttab/model.hpp"
#include "fasttab/types.hpp"

namespace fasttab {

enum class Axis { Row, Col };

// Axis-wise means of the feature map: S_r over width, S_c over height.
std::pair<TensorPtr, TensorPtr> axial_sequences(const FeatureMap& f);

// One axial branch: 1x1 projection + positional embeddings + the configured
// context model (transformer / mlp / conv1d) + depthwise-pointwise smoothing.
// Input [d_model, L], output [d_seq, L]. Not used by the twod variant.
TensorPtr axial_encode(const TensorPtr& s, Axis axis, const ModelConfig& cfg,
                       const ParamStore& ps, bool training, Rng* rng);

// All lines-head outputs for one image.
struct LinesOut {
    TensorPtr enc_row, enc_col;  // [d_seq, H_f], [d_seq, W_f]
    TensorPtr logits_r;          // [R_max]
    TensorPtr logits_c;          // [C_max]
    TensorPtr logits_h;          // [R_max+1]
    TensorPtr row_interval;      // [R_max+1]
    TensorPtr col_interval;      // [C_max+1]
};
LinesOut lines_head(const FeatureMap& f, const TensorPtr& z, const ModelConfig& cfg,
                    const ParamStore& ps, bool training, Rng* rng);

// Adaptive pooling to P=max_count+1, flatten, linear map.
TensorPtr interval_logits(const TensorPtr& s_enc, int max_count, const TensorPtr& w,
                          const TensorPtr& b);

struct CountDecode {
    int R, C, H_hdr;
};
// Argmax decode; index k means count k+1 for R/C, ties break to lowest index,
// header clamped to the decoded row count.
CountDecode decode_counts(const TensorPtr& logits_r, const TensorPtr& logits_c,
                          const TensorPtr& logits_h);

// Keep first `count` logits, softmax, cumulative sum with leading 0;
// renormalized so the final boundary is exactly 1. Output [count+1].
TensorPtr decode_boundaries(const TensorPtr& interval, int count);

std::vector<double> boundary_values(const TensorPtr& interval, int count);

}  // namespace fasttab
