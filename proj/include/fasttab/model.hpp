#pragma once

#include <map>
#include <string>
#include <vector>

#include "fasttab/rng.hpp"
#include "fasttab/tensor.hpp"

namespace fasttab {

enum class HeadVariant { Mlp, Conv1d, Transformer, TwoD };

HeadVariant head_variant_from_string(const std::string& s);
std::string head_variant_to_string(HeadVariant v);

struct ModelConfig {
    // encoder
    int d_model = 32;
    std::vector<int> stage_channels = {8, 16, 24, 32};  // last entry == d_model

    // TRM
    int d_z = 128;
    int T = 3;

    // axial / lines head
    int d_seq = 32;
    int layers = 2;
    int heads = 4;
    int d_ff = 64;
    double dropout = 0.1;
    int pos_max_len = 64;
    int mlp_hidden = 256;
    HeadVariant head_variant = HeadVariant::Transformer;

    // caps
    int R_max = 8, C_max = 8, RS_max = 4, CS_max = 4;

    // span head
    std::vector<int> span_hidden = {64, 64, 32};

    // curved extension
    bool curved = false;
    int K = 128;
    double curve_bound = 0.0;  // 0 => half the smallest base interval
    double w_smooth = 0.1, w_cross = 0.1;

    // loss weights
    double w_counts = 1.0, w_header = 1.0, w_boundaries = 1.0, w_spans = 1.0;
    double anchor_upweight = 2.0;

    // optimizer / schedule
    double lr = 1e-3;
    double weight_decay = 0.01;
    double tf_start = 1.0, tf_end = 0.2;
    int anneal_steps = 500;
    double perturb_sigma = 0.01;
    uint64_t seed = 42;

    std::string to_json_string() const;
    static ModelConfig from_json_string(const std::string& s);
    static ModelConfig from_json_file(const std::string& path);

    void validate() const;
};

// Named parameter map; std::map keeps a stable serialization order.
struct ParamStore {
    std::map<std::string, TensorPtr> tensors;

    TensorPtr& operator[](const std::string& name) { return tensors[name]; }
    const TensorPtr& at(const std::string& name) const;
    bool has(const std::string& name) const { return tensors.count(name) > 0; }
    void zero_grads();
};

struct Model {
    ModelConfig cfg;
    ParamStore params;

    static Model init(const ModelConfig& cfg, Rng& rng);
};

}  // namespace fasttab
