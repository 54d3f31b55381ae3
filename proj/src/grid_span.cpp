#include "fasttab/grid_span.hpp"

#include "fasttab/ops.hpp"

namespace fasttab {

std::vector<CellRect> grid_cells(const GridSpec& g) {
    g.validate();
    std::vector<CellRect> cells;
    cells.reserve(static_cast<size_t>(g.R) * g.C);
    for (int r = 0; r < g.R; ++r)
        for (int c = 0; c < g.C; ++c) {
            CellRect rect;
            rect.r = r;
            rect.c = c;
            rect.x0 = g.x[c];
            rect.x1 = g.x[c + 1];
            rect.y0 = g.y[r];
            rect.y1 = g.y[r + 1];
            cells.push_back(rect);
        }
    return cells;
}

SpanLogits span_head(const TensorPtr& u, const ModelConfig& cfg, const ParamStore& ps,
                     bool training, Rng* rng) {
    if (u->shape.size() != 2 || u->shape[1] != cfg.d_model)
        throw dimension_error("span_head: expected U[N,d_model], got " + shape_str(u->shape));
    Rng fallback(0);
    Rng& r = rng ? *rng : fallback;

    auto h = ops::gelu(ops::linear(u, ps.at("span.fc1.w"), ps.at("span.fc1.b")));
    h = ops::dropout(h, cfg.dropout, r, training);
    h = ops::gelu(ops::linear(h, ps.at("span.fc2.w"), ps.at("span.fc2.b")));
    h = ops::dropout(h, cfg.dropout, r, training);
    h = ops::linear(h, ps.at("span.fc3.w"), ps.at("span.fc3.b"));

    SpanLogits out;
    out.rs = ops::linear(h, ps.at("span.rs.w"), ps.at("span.rs.b"));
    out.cs = ops::linear(h, ps.at("span.cs.w"), ps.at("span.cs.b"));
    return out;
}

SpanGrid resolve_spans(const std::vector<int>& rs_pred, const std::vector<int>& cs_pred,
                       int r, int c) {
    if (static_cast<int>(rs_pred.size()) != r * c || static_cast<int>(cs_pred.size()) != r * c)
        throw dimension_error("resolve_spans: prediction matrices do not match grid " +
                              std::to_string(r) + "x" + std::to_string(c));
    SpanGrid g;
    g.R = r;
    g.C = c;
    g.rs.assign(static_cast<size_t>(r) * c, 1);
    g.cs.assign(static_cast<size_t>(r) * c, 1);
    g.is_anchor.assign(static_cast<size_t>(r) * c, 0);
    std::vector<uint8_t> claimed(static_cast<size_t>(r) * c, 0);

    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            const int idx = i * c + j;
            if (claimed[idx]) continue;
            int want_rs = std::max(1, rs_pred[idx]);
            int want_cs = std::max(1, cs_pred[idx]);
            want_rs = std::min(want_rs, r - i);  // clip to grid edge
            want_cs = std::min(want_cs, c - j);
            // shrink colspan along the anchor row first
            int cs = 1;
            while (cs < want_cs && !claimed[i * c + j + cs]) ++cs;
            // then shrink rowspan so the whole region is unclaimed
            int rs = 1;
            for (; rs < want_rs; ++rs) {
                bool free_row = true;
                for (int dc = 0; dc < cs; ++dc)
                    if (claimed[(i + rs) * c + j + dc]) free_row = false;
                if (!free_row) break;
            }
            g.is_anchor[idx] = 1;
            g.rs[idx] = rs;
            g.cs[idx] = cs;
            for (int dr = 0; dr < rs; ++dr)
                for (int dc = 0; dc < cs; ++dc) claimed[(i + dr) * c + j + dc] = 1;
        }
    }
    return g;
}

}  // namespace fasttab
