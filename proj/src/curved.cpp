#include "fasttab/curved.hpp"

#include <algorithm>

#include "fasttab/ops.hpp"

namespace fasttab {

double default_curve_bound(const GridSpec& base) {
    double smallest = 1.0;
    for (int i = 0; i < base.R; ++i) smallest = std::min(smallest, base.y[i + 1] - base.y[i]);
    for (int j = 0; j < base.C; ++j) smallest = std::min(smallest, base.x[j + 1] - base.x[j]);
    return 0.5 * smallest;
}

TensorPtr decode_curved_axis(const std::vector<double>& base_bounds, const TensorPtr& offsets,
                             double bound) {
    const int64_t n1 = static_cast<int64_t>(base_bounds.size());  // count+1 boundaries
    if (offsets->shape.size() != 2 || offsets->shape[0] < n1)
        throw dimension_error("decode_curved_axis: offsets " + shape_str(offsets->shape) +
                              " too small for " + std::to_string(n1) + " boundaries");
    const int64_t k = offsets->shape[1];

    auto off = ops::slice(offsets, 0, 0, n1);
    // interior mask: outer boundaries stay pinned at 0 / 1
    auto mask = Tensor::zeros({n1, k});
    auto base = Tensor::zeros({n1, k});
    for (int64_t i = 0; i < n1; ++i)
        for (int64_t j = 0; j < k; ++j) {
            base->data[i * k + j] = base_bounds[i];
            mask->data[i * k + j] = (i == 0 || i == n1 - 1) ? 0.0 : 1.0;
        }
    auto residual = ops::scale(ops::mul(ops::tanh_op(off), mask), bound);
    return ops::add(base, residual);
}

CurvedDecode decode_curved(const GridSpec& base, const TensorPtr& row_offsets,
                           const TensorPtr& col_offsets, double bound) {
    base.validate();
    const double b = bound > 0.0 ? bound : default_curve_bound(base);
    CurvedDecode d;
    d.row_poly = decode_curved_axis(base.y, row_offsets, b);
    d.col_poly = decode_curved_axis(base.x, col_offsets, b);
    return d;
}

CurvedGrid curved_grid_values(const GridSpec& base, const CurvedDecode& d) {
    CurvedGrid cg;
    cg.base = base;
    cg.K = static_cast<int>(d.row_poly->shape[1]);
    cg.row_poly = d.row_poly->data;
    cg.col_poly = d.col_poly->data;
    return cg;
}

TensorPtr smoothness_penalty(const TensorPtr& polys) {
    if (polys->shape.size() != 2) throw dimension_error("smoothness_penalty: need [n,K]");
    const int64_t k = polys->shape[1];
    if (k < 3) return Tensor::scalar(0.0);
    auto left = ops::slice(polys, 1, 0, k - 2);
    auto mid = ops::slice(polys, 1, 1, k - 2);
    auto right = ops::slice(polys, 1, 2, k - 2);
    auto d2 = ops::sub(ops::add(left, right), ops::scale(mid, 2.0));
    return ops::sum_all(ops::mul(d2, d2));
}

TensorPtr non_crossing_penalty(const TensorPtr& polys) {
    if (polys->shape.size() != 2) throw dimension_error("non_crossing_penalty: need [n,K]");
    const int64_t n = polys->shape[0];
    if (n < 2) return Tensor::scalar(0.0);
    auto upper = ops::slice(polys, 0, 0, n - 1);
    auto lower = ops::slice(polys, 0, 1, n - 1);
    auto viol = ops::relu(ops::sub(upper, lower));
    return ops::sum_all(ops::mul(viol, viol));
}

CellRect curved_cell_rect(const CurvedGrid& cg, int r, int c) {
    if (r < 0 || r >= cg.base.R || c < 0 || c >= cg.base.C)
        throw dimension_error("curved_cell_rect: cell index out of range");
    const int k = cg.K;
    auto row_min = [&](int i) {
        return *std::min_element(cg.row_poly.begin() + i * k, cg.row_poly.begin() + (i + 1) * k);
    };
    auto row_max = [&](int i) {
        return *std::max_element(cg.row_poly.begin() + i * k, cg.row_poly.begin() + (i + 1) * k);
    };
    auto col_min = [&](int j) {
        return *std::min_element(cg.col_poly.begin() + j * k, cg.col_poly.begin() + (j + 1) * k);
    };
    auto col_max = [&](int j) {
        return *std::max_element(cg.col_poly.begin() + j * k, cg.col_poly.begin() + (j + 1) * k);
    };
    CellRect rect;
    rect.r = r;
    rect.c = c;
    rect.y0 = row_min(r);
    rect.y1 = row_max(r + 1);
    rect.x0 = col_min(c);
    rect.x1 = col_max(c + 1);
    return rect;
}

TensorPtr curved_offsets(const TensorPtr& enc, const TensorPtr& w, const TensorPtr& b, int k) {
    auto at_k = ops::resample_linear(enc, k);              // [d_seq, K]
    auto per_point = ops::linear(ops::transpose2d(at_k), w, b);  // [K, max+1]
    return ops::transpose2d(per_point);                    // [(max+1), K]
}

}  // namespace fasttab
