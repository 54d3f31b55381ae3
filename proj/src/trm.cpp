#include "fasttab/trm.hpp"

#include "fasttab/ops.hpp"

namespace fasttab {

TensorPtr global_pool(const FeatureMap& f) {
    auto m = ops::mean_axis(f.t, 2);  // [d, Hf]
    return ops::mean_axis(m, 1);      // [d]
}

TensorPtr trm_refine(const TensorPtr& g, const ModelConfig& cfg, const ParamStore& ps,
                     int t_override) {
    const int t_total = t_override >= 0 ? t_override : cfg.T;
    auto z = ps.at("trm.z0");
    const auto& win = ps.at("trm.win");
    const auto& wout = ps.at("trm.wout");
    const auto& ln_g = ps.at("trm.ln.g");
    const auto& ln_b = ps.at("trm.ln.b");

    for (int t = 0; t < t_total; ++t) {
        auto zn = ops::layernorm(z, ln_g, ln_b);
        auto u = ops::reshape(ops::concat({zn, g}, 0), {1, cfg.d_z + cfg.d_model});
        auto hidden = ops::gelu(ops::linear(u, win, nullptr));
        auto delta = ops::reshape(ops::linear(hidden, wout, nullptr), {cfg.d_z});
        z = ops::add(z, delta);
    }
    return z;
}

}  // namespace fasttab
