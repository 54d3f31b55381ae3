#pragma once

#include <vector>

#include "fasttab/axial.hpp"
#include "fasttab/data.hpp"
#include "fasttab/grid_span.hpp"
#include "fasttab/model.hpp"

namespace fasttab {

struct LossBreakdown {
    double counts = 0, header = 0, boundaries = 0, spans = 0;
    double reg_smooth = 0, reg_cross = 0;
    double total = 0;
};

// Differentiable loss terms plus their weighted total.
struct LossTerms {
    TensorPtr counts, header, boundaries, spans;
    TensorPtr reg_smooth, reg_cross;  // null unless the curved path ran
    TensorPtr total;

    LossBreakdown values() const;
};

// Counts/header cross-entropy, interior-boundary MSE at the ground-truth
// counts, anchor-masked span cross-entropy with merged-anchor upweighting,
// optional curved-polyline regularizers.
LossTerms compute_losses(const LinesOut& lines, const SpanLogits& span_logits,
                         const GridSpec& gt, const SpanGrid& gt_spans, const ModelConfig& cfg,
                         const TensorPtr& row_poly = nullptr, const TensorPtr& col_poly = nullptr,
                         const std::string& sample_id = "");

struct ForwardOptions {
    bool training = false;
    bool use_gt_rois = true;            // teacher forcing for ROI construction
    const GridSpec* roi_grid = nullptr;  // overrides the sample grid when set
    Rng* rng = nullptr;                 // dropout noise (training only)
};

// Full forward pass for one sample ending in the loss terms.
LossTerms forward_losses(const ModelConfig& cfg, const ParamStore& ps, const Sample& s,
                         const ForwardOptions& opt);

// Linear anneal from tf_start to tf_end over anneal_steps, flat afterwards.
double tf_fraction(int64_t step, const ModelConfig& cfg);

// Clipped-Gaussian jitter of interior boundaries; ordering is preserved and
// the endpoints never move. sigma=0 is the identity.
GridSpec perturb_boundaries(const GridSpec& g, double sigma, Rng& rng);

// Decoupled weight decay Adam over a ParamStore.
struct AdamW {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double weight_decay = 0.0;
    int64_t t = 0;
    std::map<std::string, std::vector<double>> m, v;

    void step(ParamStore& ps, double lr);
};

double cosine_lr(double base, int64_t step, int64_t total_steps);

// Single-threaded toy loop: one optimizer step per sample, teacher-forcing
// coin per sample, per-epoch mean loss breakdown appended to `log`.
Model train_toy(const ModelConfig& cfg, const std::vector<Sample>& dataset, int epochs,
                uint64_t seed, std::vector<LossBreakdown>* log = nullptr);

}  // namespace fasttab
