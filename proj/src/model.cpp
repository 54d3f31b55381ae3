#include "fasttab/model.hpp"

#include <fstream>

#include "json.hpp"

#include "fasttab/common.hpp"

namespace fasttab {

using nlohmann::json;

HeadVariant head_variant_from_string(const std::string& s) {
    if (s == "mlp") return HeadVariant::Mlp;
    if (s == "conv1d") return HeadVariant::Conv1d;
    if (s == "transformer") return HeadVariant::Transformer;
    if (s == "twod") return HeadVariant::TwoD;
    throw config_error("unknown head variant '" + s + "' (expected mlp|conv1d|transformer|twod)");
}

std::string head_variant_to_string(HeadVariant v) {
    switch (v) {
        case HeadVariant::Mlp: return "mlp";
        case HeadVariant::Conv1d: return "conv1d";
        case HeadVariant::Transformer: return "transformer";
        case HeadVariant::TwoD: return "twod";
    }
    return "transformer";
}

void ModelConfig::validate() const {
    if (stage_channels.size() != 4) throw config_error("stage_channels must have 4 entries");
    if (stage_channels.back() != d_model)
        throw config_error("stage_channels must end at d_model");
    if (d_seq % heads != 0) throw config_error("d_seq must be divisible by heads");
    if (T < 0) throw config_error("T must be >= 0");
    if (R_max < 1 || C_max < 1 || RS_max < 1 || CS_max < 1)
        throw config_error("caps must be positive");
    if (span_hidden.size() != 3) throw config_error("span_hidden must have 3 entries");
    if (K < 2) throw config_error("K must be >= 2");
}

std::string ModelConfig::to_json_string() const {
    json j;
    j["d_model"] = d_model;
    j["stage_channels"] = stage_channels;
    j["d_z"] = d_z;
    j["T"] = T;
    j["d_seq"] = d_seq;
    j["layers"] = layers;
    j["heads"] = heads;
    j["d_ff"] = d_ff;
    j["dropout"] = dropout;
    j["pos_max_len"] = pos_max_len;
    j["mlp_hidden"] = mlp_hidden;
    j["head_variant"] = head_variant_to_string(head_variant);
    j["R_max"] = R_max;
    j["C_max"] = C_max;
    j["RS_max"] = RS_max;
    j["CS_max"] = CS_max;
    j["span_hidden"] = span_hidden;
    j["curved"] = curved;
    j["K"] = K;
    j["curve_bound"] = curve_bound;
    j["w_smooth"] = w_smooth;
    j["w_cross"] = w_cross;
    j["w_counts"] = w_counts;
    j["w_header"] = w_header;
    j["w_boundaries"] = w_boundaries;
    j["w_spans"] = w_spans;
    j["anchor_upweight"] = anchor_upweight;
    j["lr"] = lr;
    j["weight_decay"] = weight_decay;
    j["tf_start"] = tf_start;
    j["tf_end"] = tf_end;
    j["anneal_steps"] = anneal_steps;
    j["perturb_sigma"] = perturb_sigma;
    j["seed"] = seed;
    return j.dump();
}

ModelConfig ModelConfig::from_json_string(const std::string& s) {
    json j;
    try {
        j = json::parse(s);
    } catch (const std::exception& e) {
        throw config_error(std::string("config JSON parse failed: ") + e.what());
    }
    ModelConfig c;
    auto get = [&](const char* k, auto& out) {
        if (j.contains(k)) out = j.at(k).template get<std::decay_t<decltype(out)>>();
    };
    get("d_model", c.d_model);
    get("stage_channels", c.stage_channels);
    get("d_z", c.d_z);
    get("T", c.T);
    get("d_seq", c.d_seq);
    get("layers", c.layers);
    get("heads", c.heads);
    get("d_ff", c.d_ff);
    get("dropout", c.dropout);
    get("pos_max_len", c.pos_max_len);
    get("mlp_hidden", c.mlp_hidden);
    if (j.contains("head_variant"))
        c.head_variant = head_variant_from_string(j.at("head_variant").get<std::string>());
    get("R_max", c.R_max);
    get("C_max", c.C_max);
    get("RS_max", c.RS_max);
    get("CS_max", c.CS_max);
    get("span_hidden", c.span_hidden);
    get("curved", c.curved);
    get("K", c.K);
    get("curve_bound", c.curve_bound);
    get("w_smooth", c.w_smooth);
    get("w_cross", c.w_cross);
    get("w_counts", c.w_counts);
    get("w_header", c.w_header);
    get("w_boundaries", c.w_boundaries);
    get("w_spans", c.w_spans);
    get("anchor_upweight", c.anchor_upweight);
    get("lr", c.lr);
    get("weight_decay", c.weight_decay);
    get("tf_start", c.tf_start);
    get("tf_end", c.tf_end);
    get("anneal_steps", c.anneal_steps);
    get("perturb_sigma", c.perturb_sigma);
    get("seed", c.seed);
    c.validate();
    return c;
}

ModelConfig ModelConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open config file " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(s);
}

const TensorPtr& ParamStore::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw config_error("missing parameter '" + name + "'");
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [name, t] : tensors) t->zero_grad();
}

namespace {

TensorPtr init_tensor(Rng& rng, Shape shape, int64_t fan_in, int64_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> d(static_cast<size_t>(numel(shape)));
    for (auto& v : d) v = rng.uniform(-a, a);
    return Tensor::create(std::move(shape), std::move(d), true);
}

void add_linear(ParamStore& ps, Rng& rng, const std::string& name, int64_t dout, int64_t din,
                bool bias = true) {
    ps[name + ".w"] = init_tensor(rng, {dout, din}, din, dout);
    if (bias) ps[name + ".b"] = Tensor::zeros({dout}, true);
}

void add_conv2d(ParamStore& ps, Rng& rng, const std::string& name, int64_t cout, int64_t cing,
                int64_t kh, int64_t kw) {
    ps[name + ".w"] = init_tensor(rng, {cout, cing, kh, kw}, cing * kh * kw, cout * kh * kw);
    ps[name + ".b"] = Tensor::zeros({cout}, true);
}

void add_conv1d(ParamStore& ps, Rng& rng, const std::string& name, int64_t cout, int64_t cing,
                int64_t k) {
    ps[name + ".w"] = init_tensor(rng, {cout, cing, k}, cing * k, cout * k);
    ps[name + ".b"] = Tensor::zeros({cout}, true);
}

void add_ln(ParamStore& ps, const std::string& name, int64_t d) {
    ps[name + ".g"] = Tensor::full({d}, 1.0, true);
    ps[name + ".b"] = Tensor::zeros({d}, true);
}

}  // namespace

Model Model::init(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    ParamStore& ps = m.params;

    // encoder: 4 stages, each conv(k3, stage stride) + conv(k3, stride 1)
    int cin = 3;
    for (int s = 0; s < 4; ++s) {
        const int ch = cfg.stage_channels[s];
        add_conv2d(ps, rng, "encoder.s" + std::to_string(s) + ".c1", ch, cin, 3, 3);
        add_conv2d(ps, rng, "encoder.s" + std::to_string(s) + ".c2", ch, ch, 3, 3);
        cin = ch;
    }

    // TRM
    ps["trm.z0"] = init_tensor(rng, {cfg.d_z}, cfg.d_z, cfg.d_z);
    ps["trm.win"] = init_tensor(rng, {cfg.d_z, cfg.d_z + cfg.d_model},
                                cfg.d_z + cfg.d_model, cfg.d_z);
    ps["trm.wout"] = init_tensor(rng, {cfg.d_z, cfg.d_z}, cfg.d_z, cfg.d_z);
    add_ln(ps, "trm.ln", cfg.d_z);

    // axial branches
    const char* axes[2] = {"row", "col"};
    if (cfg.head_variant == HeadVariant::TwoD) {
        for (int bk = 0; bk < 3; ++bk) {
            const std::string b = "lines.twod.b" + std::to_string(bk);
            add_conv2d(ps, rng, b + ".dw", cfg.d_model, 1, 3, 3);  // depthwise, groups=d_model
            add_conv2d(ps, rng, b + ".pw", cfg.d_model, cfg.d_model, 1, 1);
        }
        for (const char* ax : axes)
            add_conv2d(ps, rng, std::string("lines.twod.") + ax + ".head", cfg.d_seq,
                       cfg.d_model, 1, 1);
    } else {
        for (const char* ax : axes) {
            const std::string p = std::string("lines.") + ax;
            add_conv1d(ps, rng, p + ".proj", cfg.d_seq, cfg.d_model, 1);
            ps[p + ".pos"] = init_tensor(rng, {cfg.d_seq, cfg.pos_max_len},
                                         cfg.pos_max_len, cfg.d_seq);
            switch (cfg.head_variant) {
                case HeadVariant::Transformer:
                    for (int l = 0; l < cfg.layers; ++l) {
                        const std::string lp = p + ".l" + std::to_string(l);
                        add_ln(ps, lp + ".ln1", cfg.d_seq);
                        add_linear(ps, rng, lp + ".attn.q", cfg.d_seq, cfg.d_seq);
                        add_linear(ps, rng, lp + ".attn.k", cfg.d_seq, cfg.d_seq);
                        add_linear(ps, rng, lp + ".attn.v", cfg.d_seq, cfg.d_seq);
                        add_linear(ps, rng, lp + ".attn.o", cfg.d_seq, cfg.d_seq);
                        add_ln(ps, lp + ".ln2", cfg.d_seq);
                        add_linear(ps, rng, lp + ".ff.1", cfg.d_ff, cfg.d_seq);
                        add_linear(ps, rng, lp + ".ff.2", cfg.d_seq, cfg.d_ff);
                    }
                    break;
                case HeadVariant::Mlp:
                    add_linear(ps, rng, p + ".mlp.1", cfg.mlp_hidden, cfg.d_seq);
                    add_linear(ps, rng, p + ".mlp.2", cfg.d_seq, cfg.mlp_hidden);
                    break;
                case HeadVariant::Conv1d:
                    for (int l = 0; l < cfg.layers; ++l)
                        add_conv1d(ps, rng, p + ".cv" + std::to_string(l), cfg.d_seq,
                                   cfg.d_seq, 3);
                    break;
                default:
                    break;
            }
            // local smoothing tail: depthwise k3 + pointwise 1x1
            add_conv1d(ps, rng, p + ".dw", cfg.d_seq, 1, 3);  // groups=d_seq
            add_conv1d(ps, rng, p + ".pw", cfg.d_seq, cfg.d_seq, 1);
        }
    }

    // count / header heads over [z, mean(S_r), mean(S_c)]
    const int fused = cfg.d_z + 2 * cfg.d_seq;
    add_linear(ps, rng, "counts.r", cfg.R_max, fused);
    add_linear(ps, rng, "counts.c", cfg.C_max, fused);
    add_linear(ps, rng, "counts.h", cfg.R_max + 1, fused);

    // interval heads: adaptive pool to P=max+1, flatten, linear
    add_linear(ps, rng, "lines.row.int", cfg.R_max + 1,
               static_cast<int64_t>(cfg.d_seq) * (cfg.R_max + 1));
    add_linear(ps, rng, "lines.col.int", cfg.C_max + 1,
               static_cast<int64_t>(cfg.d_seq) * (cfg.C_max + 1));

    // span head
    add_linear(ps, rng, "span.fc1", cfg.span_hidden[0], cfg.d_model);
    add_linear(ps, rng, "span.fc2", cfg.span_hidden[1], cfg.span_hidden[0]);
    add_linear(ps, rng, "span.fc3", cfg.span_hidden[2], cfg.span_hidden[1]);
    add_linear(ps, rng, "span.rs", cfg.RS_max, cfg.span_hidden[2]);
    add_linear(ps, rng, "span.cs", cfg.CS_max, cfg.span_hidden[2]);

    // curved residual-offset heads (per sample point, over resampled axial features)
    if (cfg.curved) {
        add_linear(ps, rng, "curved.row", cfg.R_max + 1, cfg.d_seq);
        add_linear(ps, rng, "curved.col", cfg.C_max + 1, cfg.d_seq);
    }

    return m;
}

}  // namespace fasttab
