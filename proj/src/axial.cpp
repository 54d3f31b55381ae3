#include "fasttab/axial.hpp"

#include <cmath>

#include "fasttab/ops.hpp"

namespace fasttab {

using namespace ops;

std::pair<TensorPtr, TensorPtr> axial_sequences(const FeatureMap& f) {
    return {mean_axis(f.t, 2), mean_axis(f.t, 1)};
}

namespace {

TensorPtr mha(const TensorPtr& tokens, const std::string& p, const ModelConfig& cfg,
              const ParamStore& ps) {
    const int64_t d = cfg.d_seq;
    const int64_t a = cfg.heads;
    const int64_t dh = d / a;
    auto q = linear(tokens, ps.at(p + ".q.w"), ps.at(p + ".q.b"));
    auto k = linear(tokens, ps.at(p + ".k.w"), ps.at(p + ".k.b"));
    auto v = linear(tokens, ps.at(p + ".v.w"), ps.at(p + ".v.b"));
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<TensorPtr> heads;
    for (int64_t h = 0; h < a; ++h) {
        auto qh = slice(q, 1, h * dh, dh);
        auto kh = slice(k, 1, h * dh, dh);
        auto vh = slice(v, 1, h * dh, dh);
        auto scores = scale(matmul(qh, transpose2d(kh)), inv_sqrt);
        auto attn = softmax(scores, 1);
        heads.push_back(matmul(attn, vh));
    }
    auto cat = concat(heads, 1);
    return linear(cat, ps.at(p + ".o.w"), ps.at(p + ".o.b"));
}

}  // namespace

TensorPtr axial_encode(const TensorPtr& s, Axis axis, const ModelConfig& cfg,
                       const ParamStore& ps, bool training, Rng* rng) {
    if (s->shape.size() != 2) throw dimension_error("axial_encode: need [d_model,L]");
    const int64_t l = s->shape[1];
    if (l < 1) throw dimension_error("axial_encode: empty sequence");
    const std::string p = axis == Axis::Row ? "lines.row" : "lines.col";

    auto x = conv1d(s, ps.at(p + ".proj.w"), ps.at(p + ".proj.b"), 1, 0);  // [d_seq, L]

    // learned positional embeddings, length-interpolated beyond the table
    const auto& pos = ps.at(p + ".pos");
    TensorPtr pe = (l <= cfg.pos_max_len) ? slice(pos, 1, 0, l) : resample_linear(pos, l);
    x = add(x, pe);

    Rng fallback(0);
    Rng& r = rng ? *rng : fallback;

    switch (cfg.head_variant) {
        case HeadVariant::Transformer: {
            auto tokens = transpose2d(x);  // [L, d_seq]
            for (int li = 0; li < cfg.layers; ++li) {
                const std::string lp = p + ".l" + std::to_string(li);
                auto a = mha(layernorm(tokens, ps.at(lp + ".ln1.g"), ps.at(lp + ".ln1.b")),
                             lp + ".attn", cfg, ps);
                tokens = add(tokens, dropout(a, cfg.dropout, r, training));
                auto h = layernorm(tokens, ps.at(lp + ".ln2.g"), ps.at(lp + ".ln2.b"));
                h = linear(h, ps.at(lp + ".ff.1.w"), ps.at(lp + ".ff.1.b"));
                h = gelu(h);
                h = linear(h, ps.at(lp + ".ff.2.w"), ps.at(lp + ".ff.2.b"));
                tokens = add(tokens, dropout(h, cfg.dropout, r, training));
            }
            x = transpose2d(tokens);
            break;
        }
        case HeadVariant::Mlp: {
            auto tokens = transpose2d(x);
            tokens = gelu(linear(tokens, ps.at(p + ".mlp.1.w"), ps.at(p + ".mlp.1.b")));
            tokens = dropout(tokens, cfg.dropout, r, training);
            tokens = linear(tokens, ps.at(p + ".mlp.2.w"), ps.at(p + ".mlp.2.b"));
            x = transpose2d(tokens);
            break;
        }
        case HeadVariant::Conv1d: {
            for (int li = 0; li < cfg.layers; ++li) {
                const std::string cp = p + ".cv" + std::to_string(li);
                auto h = gelu(conv1d(x, ps.at(cp + ".w"), ps.at(cp + ".b"), 1, 1));
                x = add(x, dropout(h, cfg.dropout, r, training));
            }
            break;
        }
        case HeadVariant::TwoD:
            throw config_error("axial_encode: twod variant operates on the 2D map");
    }

    // depthwise k3 + pointwise 1x1 + GELU smoothing tail
    x = conv1d(x, ps.at(p + ".dw.w"), ps.at(p + ".dw.b"), 1, 1, cfg.d_seq);
    x = conv1d(x, ps.at(p + ".pw.w"), ps.at(p + ".pw.b"), 1, 0);
    return gelu(x);
}

TensorPtr interval_logits(const TensorPtr& s_enc, int max_count, const TensorPtr& w,
                          const TensorPtr& b) {
    if (s_enc->shape.size() != 2) throw dimension_error("interval_logits: need [d_seq,L]");
    const int64_t p = max_count + 1;
    auto pooled = adaptive_avg_pool1d(s_enc, p);                       // [d_seq, P]
    auto flat = reshape(pooled, {1, s_enc->shape[0] * p});             // [1, d_seq*P]
    return reshape(linear(flat, w, b), {p});
}

LinesOut lines_head(const FeatureMap& f, const TensorPtr& z, const ModelConfig& cfg,
                    const ParamStore& ps, bool training, Rng* rng) {
    LinesOut out;
    if (cfg.head_variant == HeadVariant::TwoD) {
        auto x = f.t;
        for (int bk = 0; bk < 3; ++bk) {
            const std::string b = "lines.twod.b" + std::to_string(bk);
            x = conv2d(x, ps.at(b + ".dw.w"), ps.at(b + ".dw.b"), 1, 1, 1, 1, cfg.d_model);
            x = conv2d(x, ps.at(b + ".pw.w"), ps.at(b + ".pw.b"), 1, 1, 0, 0);
            x = gelu(x);
        }
        auto hr = conv2d(x, ps.at("lines.twod.row.head.w"), ps.at("lines.twod.row.head.b"),
                         1, 1, 0, 0);  // [d_seq, Hf, Wf]
        auto hc = conv2d(x, ps.at("lines.twod.col.head.w"), ps.at("lines.twod.col.head.b"),
                         1, 1, 0, 0);
        out.enc_row = mean_axis(hr, 2);  // reduce to 1D only at the end
        out.enc_col = mean_axis(hc, 1);
    } else {
        auto [sr, sc] = axial_sequences(f);
        out.enc_row = axial_encode(sr, Axis::Row, cfg, ps, training, rng);
        out.enc_col = axial_encode(sc, Axis::Col, cfg, ps, training, rng);
    }

    auto sr_sum = mean_axis(out.enc_row, 1);  // [d_seq]
    auto sc_sum = mean_axis(out.enc_col, 1);
    auto fused = reshape(concat({z, sr_sum, sc_sum}, 0), {1, cfg.d_z + 2 * cfg.d_seq});
    out.logits_r = reshape(linear(fused, ps.at("counts.r.w"), ps.at("counts.r.b")), {cfg.R_max});
    out.logits_c = reshape(linear(fused, ps.at("counts.c.w"), ps.at("counts.c.b")), {cfg.C_max});
    out.logits_h =
        reshape(linear(fused, ps.at("counts.h.w"), ps.at("counts.h.b")), {cfg.R_max + 1});

    out.row_interval =
        interval_logits(out.enc_row, cfg.R_max, ps.at("lines.row.int.w"), ps.at("lines.row.int.b"));
    out.col_interval =
        interval_logits(out.enc_col, cfg.C_max, ps.at("lines.col.int.w"), ps.at("lines.col.int.b"));
    return out;
}

namespace {
int argmax_lowest(const TensorPtr& t) {
    int best = 0;
    for (int64_t i = 1; i < t->numel(); ++i)
        if (t->data[i] > t->data[best]) best = static_cast<int>(i);
    return best;
}
}  // namespace

CountDecode decode_counts(const TensorPtr& logits_r, const TensorPtr& logits_c,
                          const TensorPtr& logits_h) {
    CountDecode d;
    d.R = argmax_lowest(logits_r) + 1;  // index k <-> count k+1
    d.C = argmax_lowest(logits_c) + 1;
    d.H_hdr = std::min(argmax_lowest(logits_h), d.R);
    return d;
}

TensorPtr decode_boundaries(const TensorPtr& interval, int count) {
    if (interval->shape.size() != 1)
        throw dimension_error("decode_boundaries: need rank-1 logits");
    if (count < 1 || count > static_cast<int>(interval->numel()) - 1)
        throw config_error("decode_boundaries: count " + std::to_string(count) +
                           " outside [1," + std::to_string(interval->numel() - 1) + "]");
    auto p = ops::softmax(slice(interval, 0, 0, count), 0);
    auto cs = cumsum(p);
    auto last = slice(cs, 0, count - 1, 1);
    auto norm = div_by_scalar(cs, last);  // final boundary exactly 1
    return concat({Tensor::zeros({1}), norm}, 0);
}

std::vector<double> boundary_values(const TensorPtr& interval, int count) {
    NoGradGuard ng;
    auto b = decode_boundaries(interval, count);
    return b->data;
}

}  // namespace fasttab
