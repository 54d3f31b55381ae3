#pragma once

#include <vector>

#include "fasttab/rng.hpp"
#include "fasttab/tensor.hpp"

namespace fasttab::ops {

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double s);

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose2d(const TensorPtr& a);

// y = x W^T + b  with x:[N,din], W:[dout,din], b:[dout] (b may be null)
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);

TensorPtr gelu(const TensorPtr& x);   // exact erf form
TensorPtr tanh_op(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);

TensorPtr softmax(const TensorPtr& x, int axis);
TensorPtr layernorm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                    double eps = 1e-5);  // last axis

// x:[Cin,H,W], w:[Cout,Cin/groups,kh,kw], b:[Cout] or null
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int64_t sh, int64_t sw, int64_t ph, int64_t pw, int64_t groups = 1);
// x:[Cin,L], w:[Cout,Cin/groups,k]
TensorPtr conv1d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int64_t stride, int64_t pad, int64_t groups = 1);

TensorPtr concat(const std::vector<TensorPtr>& xs, int axis);
TensorPtr slice(const TensorPtr& x, int axis, int64_t start, int64_t len);
TensorPtr reshape(const TensorPtr& x, Shape s);
TensorPtr stack_rows(const std::vector<TensorPtr>& rows);  // each [d] -> [N,d]

TensorPtr mean_axis(const TensorPtr& x, int axis);
TensorPtr mean_all(const TensorPtr& x);
TensorPtr sum_all(const TensorPtr& x);

TensorPtr adaptive_avg_pool1d(const TensorPtr& x, int64_t p);     // [d,L] -> [d,P]
TensorPtr resample_linear(const TensorPtr& x, int64_t k);         // [d,L] -> [d,K]
TensorPtr cumsum(const TensorPtr& x);                             // [n] -> [n]
TensorPtr div_by_scalar(const TensorPtr& x, const TensorPtr& s);  // s: scalar node

TensorPtr dropout(const TensorPtr& x, double p, Rng& rng, bool training);

TensorPtr cross_entropy_logits(const TensorPtr& logits, int64_t target);  // [n] -> scalar
TensorPtr mse(const TensorPtr& a, const TensorPtr& b);                    // mean((a-b)^2)

// 1x1 ROI-align over F:[C,Hf,Wf]; rect in normalized [0,1] coordinates with
// half-pixel alignment and a 2x2 interior sampling grid. Differentiable in F.
TensorPtr roi_align_1x1(const TensorPtr& f, double x0, double y0, double x1, double y1);

}  // namespace fasttab::ops
