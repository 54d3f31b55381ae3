#include "fasttab/training.hpp"

#include <cmath>

#include "fasttab/curved.hpp"
#include "fasttab/encoder.hpp"
#include "fasttab/ops.hpp"
#include "fasttab/trm.hpp"

namespace fasttab {

namespace {

double term_value(const TensorPtr& t) { return t ? t->item() : 0.0; }

TensorPtr row_as_vec(const TensorPtr& mat, int64_t row) {
    const int64_t d = mat->shape[1];
    return ops::reshape(ops::slice(mat, 0, row, 1), {d});
}

}  // namespace

LossBreakdown LossTerms::values() const {
    LossBreakdown b;
    b.counts = term_value(counts);
    b.header = term_value(header);
    b.boundaries = term_value(boundaries);
    b.spans = term_value(spans);
    b.reg_smooth = term_value(reg_smooth);
    b.reg_cross = term_value(reg_cross);
    b.total = term_value(total);
    return b;
}

LossTerms compute_losses(const LinesOut& lines, const SpanLogits& span_logits,
                         const GridSpec& gt, const SpanGrid& gt_spans, const ModelConfig& cfg,
                         const TensorPtr& row_poly, const TensorPtr& col_poly,
                         const std::string& sample_id) {
    gt.validate();
    const std::string who = sample_id.empty() ? "<sample>" : sample_id;
    if (gt.R > cfg.R_max || gt.C > cfg.C_max)
        throw data_error("sample " + who + ": grid " + std::to_string(gt.R) + "x" +
                         std::to_string(gt.C) + " exceeds caps " + std::to_string(cfg.R_max) +
                         "x" + std::to_string(cfg.C_max));

    LossTerms lt;
    lt.counts = ops::add(ops::cross_entropy_logits(lines.logits_r, gt.R - 1),
                         ops::cross_entropy_logits(lines.logits_c, gt.C - 1));
    lt.header = ops::cross_entropy_logits(lines.logits_h, gt.H_hdr);

    // MSE over the interior boundaries, decoded at the ground-truth counts;
    // the endpoints are 0 and 1 by construction and carry no signal.
    auto axis_mse = [](const TensorPtr& interval, int count, const std::vector<double>& gt_b) {
        if (count < 2) return Tensor::scalar(0.0);
        auto dec = decode_boundaries(interval, count);
        auto interior = ops::slice(dec, 0, 1, count - 1);
        auto target = Tensor::create({count - 1},
                                     std::vector<double>(gt_b.begin() + 1, gt_b.end() - 1));
        return ops::mse(interior, target);
    };
    lt.boundaries = ops::scale(ops::add(axis_mse(lines.row_interval, gt.R, gt.y),
                                        axis_mse(lines.col_interval, gt.C, gt.x)),
                               0.5);

    // Span cross-entropy at anchors only; merged anchors are upweighted.
    // Covered positions never enter the sum, so their logits get no gradient.
    if (span_logits.rs->shape[0] != static_cast<int64_t>(gt.R) * gt.C)
        throw dimension_error("compute_losses: span logits rows != R*C cells");
    TensorPtr span_sum = Tensor::scalar(0.0);
    int n_anchor = 0;
    for (int r = 0; r < gt.R; ++r)
        for (int c = 0; c < gt.C; ++c) {
            const int i = gt_spans.idx(r, c);
            if (!gt_spans.is_anchor[i]) continue;
            const int rs = gt_spans.rs[i], cs = gt_spans.cs[i];
            if (rs > cfg.RS_max || cs > cfg.CS_max)
                throw data_error("sample " + who + ": span " + std::to_string(rs) + "x" +
                                 std::to_string(cs) + " exceeds caps");
            auto ce = ops::add(ops::cross_entropy_logits(row_as_vec(span_logits.rs, i), rs - 1),
                               ops::cross_entropy_logits(row_as_vec(span_logits.cs, i), cs - 1));
            const double w = (rs > 1 || cs > 1) ? cfg.anchor_upweight : 1.0;
            span_sum = ops::add(span_sum, ops::scale(ce, w));
            ++n_anchor;
        }
    lt.spans = ops::scale(span_sum, n_anchor > 0 ? 1.0 / n_anchor : 0.0);

    TensorPtr total =
        ops::add(ops::add(ops::scale(lt.counts, cfg.w_counts), ops::scale(lt.header, cfg.w_header)),
                 ops::add(ops::scale(lt.boundaries, cfg.w_boundaries),
                          ops::scale(lt.spans, cfg.w_spans)));
    if (row_poly && col_poly) {
        lt.reg_smooth = ops::add(smoothness_penalty(row_poly), smoothness_penalty(col_poly));
        lt.reg_cross = ops::add(non_crossing_penalty(row_poly), non_crossing_penalty(col_poly));
        total = ops::add(total, ops::add(ops::scale(lt.reg_smooth, cfg.w_smooth),
                                         ops::scale(lt.reg_cross, cfg.w_cross)));
    }
    lt.total = total;
    return lt;
}

LossTerms forward_losses(const ModelConfig& cfg, const ParamStore& ps, const Sample& s,
                         const ForwardOptions& opt) {
    FeatureMap f = encode(s.image, cfg, ps);
    auto g = global_pool(f);
    auto z = trm_refine(g, cfg, ps);
    LinesOut lines = lines_head(f, z, cfg, ps, opt.training, opt.rng);

    GridSpec roi = s.grid;
    if (opt.use_gt_rois) {
        if (opt.roi_grid) roi = *opt.roi_grid;
    } else {
        roi.y = boundary_values(lines.row_interval, s.grid.R);
        roi.x = boundary_values(lines.col_interval, s.grid.C);
    }

    std::vector<TensorPtr> pooled;
    for (const CellRect& cell : grid_cells(roi))
        pooled.push_back(ops::roi_align_1x1(f.t, cell.x0, cell.y0, cell.x1, cell.y1));
    SpanLogits sp = span_head(ops::stack_rows(pooled), cfg, ps, opt.training, opt.rng);

    TensorPtr row_poly, col_poly;
    if (cfg.curved) {
        auto row_off = curved_offsets(lines.enc_row, ps.at("curved.row.w"),
                                      ps.at("curved.row.b"), cfg.K);
        auto col_off = curved_offsets(lines.enc_col, ps.at("curved.col.w"),
                                      ps.at("curved.col.b"), cfg.K);
        auto dec = decode_curved(roi, row_off, col_off, cfg.curve_bound);
        row_poly = dec.row_poly;
        col_poly = dec.col_poly;
    }
    return compute_losses(lines, sp, s.grid, s.spans, cfg, row_poly, col_poly, s.id);
}

double tf_fraction(int64_t step, const ModelConfig& cfg) {
    if (step <= 0 || cfg.anneal_steps <= 0) return step <= 0 ? cfg.tf_start : cfg.tf_end;
    if (step >= cfg.anneal_steps) return cfg.tf_end;
    const double u = static_cast<double>(step) / cfg.anneal_steps;
    return cfg.tf_start + u * (cfg.tf_end - cfg.tf_start);
}

GridSpec perturb_boundaries(const GridSpec& g, double sigma, Rng& rng) {
    g.validate();
    if (sigma <= 0.0) return g;
    GridSpec out = g;
    auto jitter_axis = [&](std::vector<double>& b) {
        const int n = static_cast<int>(b.size()) - 1;
        for (int i = 1; i < n; ++i) {
            const double lo = b[i - 1];  // already-perturbed left neighbour
            const double hi = b[i + 1];  // original right neighbour
            const double cand = b[i] + sigma * rng.normal();
            if (hi - lo <= 0) continue;  // degenerate gap, leave untouched
            const double margin = 0.01 * (hi - lo);
            b[i] = std::clamp(cand, lo + margin, hi - margin);
        }
    };
    jitter_axis(out.y);
    jitter_axis(out.x);
    out.validate();
    return out;
}

void AdamW::step(ParamStore& ps, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (auto& [name, p] : ps.tensors) {
        if (!p->requires_grad || p->grad.empty()) continue;
        auto& mv = m[name];
        auto& vv = v[name];
        if (mv.size() != p->data.size()) mv.assign(p->data.size(), 0.0);
        if (vv.size() != p->data.size()) vv.assign(p->data.size(), 0.0);
        for (size_t i = 0; i < p->data.size(); ++i) {
            const double gr = p->grad[i];
            mv[i] = beta1 * mv[i] + (1 - beta1) * gr;
            vv[i] = beta2 * vv[i] + (1 - beta2) * gr * gr;
            const double mhat = mv[i] / bc1;
            const double vhat = vv[i] / bc2;
            p->data[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p->data[i]);
        }
    }
}

double cosine_lr(double base, int64_t step, int64_t total_steps) {
    if (total_steps <= 0) return base;
    const double u = std::min(1.0, static_cast<double>(step) / total_steps);
    return base * 0.5 * (1.0 + std::cos(M_PI * u));
}

Model train_toy(const ModelConfig& cfg, const std::vector<Sample>& dataset, int epochs,
                uint64_t seed, std::vector<LossBreakdown>* log) {
    if (dataset.empty()) throw data_error("train_toy: empty dataset");
    cfg.validate();
    Rng rng(seed);
    Model model = Model::init(cfg, rng);

    AdamW adam;
    adam.weight_decay = cfg.weight_decay;
    const int64_t total_steps = static_cast<int64_t>(epochs) * dataset.size();
    int64_t step = 0;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        LossBreakdown acc;
        for (const Sample& s : dataset) {
            const bool teacher = rng.uniform() < tf_fraction(step, cfg);
            ForwardOptions fo;
            fo.training = true;
            fo.rng = &rng;
            GridSpec jittered;
            if (teacher) {
                jittered = perturb_boundaries(s.grid, cfg.perturb_sigma, rng);
                fo.roi_grid = &jittered;
                fo.use_gt_rois = true;
            } else {
                fo.use_gt_rois = false;
            }

            LossTerms lt = forward_losses(cfg, model.params, s, fo);
            const LossBreakdown b = lt.values();
            if (!std::isfinite(b.total))
                throw numeric_error("non-finite loss at step " + std::to_string(step) +
                                    " (counts=" + std::to_string(b.counts) +
                                    " header=" + std::to_string(b.header) +
                                    " boundaries=" + std::to_string(b.boundaries) +
                                    " spans=" + std::to_string(b.spans) + ")");

            model.params.zero_grads();
            backward(lt.total);
            adam.step(model.params, cosine_lr(cfg.lr, step, total_steps));

            acc.counts += b.counts;
            acc.header += b.header;
            acc.boundaries += b.boundaries;
            acc.spans += b.spans;
            acc.reg_smooth += b.reg_smooth;
            acc.reg_cross += b.reg_cross;
            acc.total += b.total;
            ++step;
        }
        if (log) {
            const double inv = 1.0 / static_cast<double>(dataset.size());
            LossBreakdown mean{acc.counts * inv,     acc.header * inv,    acc.boundaries * inv,
                               acc.spans * inv,      acc.reg_smooth * inv, acc.reg_cross * inv,
                               acc.total * inv};
            log->push_back(mean);
        }
    }
    return model;
}

}  // namespace fasttab
