#include "fasttab/pipeline.hpp"

#include <chrono>
#include <type_traits>

#include "fasttab/axial.hpp"
#include "fasttab/curved.hpp"
#include "fasttab/encoder.hpp"
#include "fasttab/grid_span.hpp"
#include "fasttab/ops.hpp"
#include "fasttab/trm.hpp"

namespace fasttab {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

// Runs one pipeline stage, records its wall time and prefixes the stage name
// onto any error coming out of it.
struct StageRunner {
    InferenceResult& res;

    template <class F>
    auto operator()(const char* name, F&& fn) -> decltype(fn()) {
        const auto t0 = Clock::now();
        try {
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                res.timings.push_back({name, micros_since(t0)});
            } else {
                auto v = fn();
                res.timings.push_back({name, micros_since(t0)});
                return v;
            }
        } catch (const config_error& e) {
            throw config_error(std::string(name) + ": " + e.what());
        } catch (const data_error& e) {
            throw data_error(std::string(name) + ": " + e.what());
        } catch (const dimension_error& e) {
            throw dimension_error(std::string(name) + ": " + e.what());
        } catch (const numeric_error& e) {
            throw numeric_error(std::string(name) + ": " + e.what());
        }
    }
};

int argmax_lowest_row(const TensorPtr& mat, int64_t row) {
    const int64_t d = mat->shape[1];
    const double* p = mat->data.data() + row * d;
    int best = 0;
    for (int64_t i = 1; i < d; ++i)
        if (p[i] > p[best]) best = static_cast<int>(i);
    return best;
}

}  // namespace

InferenceResult infer(const TensorPtr& image, const Model& model, const InferenceOptions& opt) {
    NoGradGuard ng;
    const ModelConfig& cfg = model.cfg;
    const ParamStore& ps = model.params;

    InferenceResult res;
    StageRunner stage{res};
    const auto t_start = Clock::now();

    FeatureMap f = stage("encode", [&] { return encode(image, cfg, ps); });
    TensorPtr g = stage("global_pool", [&] { return global_pool(f); });
    TensorPtr z = stage("trm_refine", [&] { return trm_refine(g, cfg, ps, opt.t_override); });
    LinesOut lines =
        stage("lines_head", [&] { return lines_head(f, z, cfg, ps, false, nullptr); });

    CountDecode counts = stage("decode_counts", [&] {
        return decode_counts(lines.logits_r, lines.logits_c, lines.logits_h);
    });

    stage("decode_boundaries", [&] {
        res.grid.R = counts.R;
        res.grid.C = counts.C;
        res.grid.H_hdr = counts.H_hdr;
        res.grid.y = boundary_values(lines.row_interval, counts.R);
        res.grid.x = boundary_values(lines.col_interval, counts.C);
        res.grid.validate();
    });

    std::vector<CellRect> cells;
    if (opt.curved) {
        stage("decode_curved", [&] {
            auto row_off = curved_offsets(lines.enc_row, ps.at("curved.row.w"),
                                          ps.at("curved.row.b"), cfg.K);
            auto col_off = curved_offsets(lines.enc_col, ps.at("curved.col.w"),
                                          ps.at("curved.col.b"), cfg.K);
            auto dec = decode_curved(res.grid, row_off, col_off, cfg.curve_bound);
            res.curved = curved_grid_values(res.grid, dec);
            res.has_curved = true;
        });
        stage("cell_rects", [&] {
            for (int r = 0; r < res.grid.R; ++r)
                for (int c = 0; c < res.grid.C; ++c)
                    cells.push_back(curved_cell_rect(res.curved, r, c));
        });
    } else {
        stage("cell_rects", [&] { cells = grid_cells(res.grid); });
    }

    TensorPtr u = stage("roi_align", [&] {
        std::vector<TensorPtr> pooled;
        pooled.reserve(cells.size());
        for (const CellRect& cell : cells)
            pooled.push_back(ops::roi_align_1x1(f.t, cell.x0, cell.y0, cell.x1, cell.y1));
        return ops::stack_rows(pooled);
    });

    SpanLogits sp = stage("span_head", [&] { return span_head(u, cfg, ps, false, nullptr); });

    SpanGrid spans = stage("resolve_spans", [&] {
        std::vector<int> rs_pred, cs_pred;
        const int64_t n = sp.rs->shape[0];
        rs_pred.reserve(n);
        cs_pred.reserve(n);
        for (int64_t i = 0; i < n; ++i) {
            rs_pred.push_back(argmax_lowest_row(sp.rs, i) + 1);
            cs_pred.push_back(argmax_lowest_row(sp.cs, i) + 1);
        }
        return resolve_spans(rs_pred, cs_pred, res.grid.R, res.grid.C);
    });

    stage("build_structure", [&] { res.structure = build_structure(res.grid, spans); });
    stage("to_html", [&] { res.html = to_html(res.structure); });

    res.total_micros = micros_since(t_start);
    return res;
}

}  // namespace fasttab
