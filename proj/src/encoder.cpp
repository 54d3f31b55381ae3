#include "fasttab/encoder.hpp"

#include "fasttab/ops.hpp"

namespace fasttab {

namespace {

// Pad right/bottom with white so (H,W) become multiples of (16,8).
TensorPtr pad_to_multiple(const TensorPtr& img, int64_t mh, int64_t mw) {
    const int64_t c = img->shape[0], h = img->shape[1], w = img->shape[2];
    const int64_t hp = (h + mh - 1) / mh * mh;
    const int64_t wp = (w + mw - 1) / mw * mw;
    if (hp == h && wp == w) return img;
    auto y = Tensor::full({c, hp, wp}, 1.0);
    for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t i = 0; i < h; ++i)
            std::copy_n(img->data.data() + (ch * h + i) * w, w,
                        y->data.data() + (ch * hp + i) * wp);
    if (grad_enabled()) {
        Tensor* yp = y.get();
        y->parents = {img};
        y->backward_fn = [yp, img, c, h, w, hp, wp] {
            img->ensure_grad();
            for (int64_t ch = 0; ch < c; ++ch)
                for (int64_t i = 0; i < h; ++i)
                    for (int64_t j = 0; j < w; ++j)
                        img->grad[(ch * h + i) * w + j] += yp->grad[(ch * hp + i) * wp + j];
        };
    }
    return y;
}

}  // namespace

FeatureMap encode(const TensorPtr& image, const ModelConfig& cfg, const ParamStore& ps) {
    if (image->shape.size() != 3 || image->shape[0] != 3)
        throw dimension_error("encode: expected image [3,H,W], got " + shape_str(image->shape));
    const int64_t h = image->shape[1], w = image->shape[2];
    if (h < 16 || w < 8)
        throw data_error("encode: image " + std::to_string(h) + "x" + std::to_string(w) +
                         " below minimum 16x8");

    static constexpr int kStrides[4][2] = {{2, 2}, {2, 2}, {2, 2}, {2, 1}};

    TensorPtr x = pad_to_multiple(image, 16, 8);
    for (int s = 0; s < 4; ++s) {
        const std::string p = "encoder.s" + std::to_string(s);
        x = ops::conv2d(x, ps.at(p + ".c1.w"), ps.at(p + ".c1.b"),
                        kStrides[s][0], kStrides[s][1], 1, 1);
        x = ops::gelu(x);
        x = ops::conv2d(x, ps.at(p + ".c2.w"), ps.at(p + ".c2.b"), 1, 1, 1, 1);
        x = ops::gelu(x);
    }

    FeatureMap f;
    f.t = x;
    f.src_h = h;
    f.src_w = w;
    return f;
}

}  // namespace fasttab
