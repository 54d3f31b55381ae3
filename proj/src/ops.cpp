#include "fasttab/ops.hpp"

#include <algorithm>
#include <cmath>

#include "fasttab/kernels.hpp"

namespace fasttab::ops {

namespace {

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape)
        throw dimension_error(std::string(op) + ": shape mismatch " + shape_str(a->shape) +
                              " vs " + shape_str(b->shape));
}

void record(const TensorPtr& y, std::vector<TensorPtr> parents, std::function<void()> fn) {
    if (!grad_enabled()) return;
    y->parents = std::move(parents);
    y->backward_fn = std::move(fn);
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "add");
    std::vector<double> d(a->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a->data[i] + b->data[i];
    auto y = Tensor::create(a->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {a, b}, [yp, a, b] {
        a->ensure_grad();
        b->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i) {
            a->grad[i] += yp->grad[i];
            b->grad[i] += yp->grad[i];
        }
    });
    return y;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> d(a->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a->data[i] - b->data[i];
    auto y = Tensor::create(a->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {a, b}, [yp, a, b] {
        a->ensure_grad();
        b->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i) {
            a->grad[i] += yp->grad[i];
            b->grad[i] -= yp->grad[i];
        }
    });
    return y;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> d(a->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a->data[i] * b->data[i];
    auto y = Tensor::create(a->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {a, b}, [yp, a, b] {
        a->ensure_grad();
        b->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i) {
            a->grad[i] += yp->grad[i] * b->data[i];
            b->grad[i] += yp->grad[i] * a->data[i];
        }
    });
    return y;
}

TensorPtr scale(const TensorPtr& a, double s) {
    std::vector<double> d(a->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a->data[i] * s;
    auto y = Tensor::create(a->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {a}, [yp, a, s] {
        a->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i) a->grad[i] += yp->grad[i] * s;
    });
    return y;
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
        throw dimension_error("matmul: incompatible shapes " + shape_str(a->shape) + " x " +
                              shape_str(b->shape));
    const int64_t n = a->shape[0], k = a->shape[1], m = b->shape[1];
    auto y = Tensor::zeros({n, m});
    kernels::matmul(a->data.data(), b->data.data(), y->data.data(), n, k, m);
    Tensor* yp = y.get();
    record(y, {a, b}, [yp, a, b, n, k, m] {
        a->ensure_grad();
        b->ensure_grad();
        // dA += dY B^T ; dB += A^T dY
        kernels::matmul_nt_acc(yp->grad.data(), b->data.data(), a->grad.data(), n, m, k);
        kernels::matmul_tn_acc(a->data.data(), yp->grad.data(), b->grad.data(), n, k, m);
    });
    return y;
}

TensorPtr transpose2d(const TensorPtr& a) {
    if (a->shape.size() != 2) throw dimension_error("transpose2d: need rank 2, got " + shape_str(a->shape));
    const int64_t n = a->shape[0], m = a->shape[1];
    std::vector<double> d(a->data.size());
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j) d[j * n + i] = a->data[i * m + j];
    auto y = Tensor::create({m, n}, std::move(d));
    Tensor* yp = y.get();
    record(y, {a}, [yp, a, n, m] {
        a->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < m; ++j) a->grad[i * m + j] += yp->grad[j * n + i];
    });
    return y;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
    if (x->shape.size() != 2 || w->shape.size() != 2 || x->shape[1] != w->shape[1])
        throw dimension_error("linear: x " + shape_str(x->shape) + " incompatible with W " +
                              shape_str(w->shape));
    const int64_t n = x->shape[0], din = x->shape[1], dout = w->shape[0];
    if (b && (b->shape.size() != 1 || b->shape[0] != dout))
        throw dimension_error("linear: bias " + shape_str(b->shape) + " does not match W " +
                              shape_str(w->shape));
    auto y = Tensor::zeros({n, dout});
    // y[i,o] = sum_j x[i,j] w[o,j]
    kernels::matmul_nt_acc(x->data.data(), w->data.data(), y->data.data(), n, din, dout);
    if (b)
        for (int64_t i = 0; i < n; ++i)
            for (int64_t o = 0; o < dout; ++o) y->data[i * dout + o] += b->data[o];
    Tensor* yp = y.get();
    std::vector<TensorPtr> parents = b ? std::vector<TensorPtr>{x, w, b} : std::vector<TensorPtr>{x, w};
    record(y, std::move(parents), [yp, x, w, b, n, din, dout] {
        x->ensure_grad();
        w->ensure_grad();
        // dX += dY W ; dW += dY^T X
        kernels::matmul_acc(yp->grad.data(), w->data.data(), x->grad.data(), n, dout, din);
        kernels::matmul_tn_acc(yp->grad.data(), x->data.data(), w->grad.data(), n, dout, din);
        if (b) {
            b->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t o = 0; o < dout; ++o) b->grad[o] += yp->grad[i * dout + o];
        }
    });
    return y;
}

TensorPtr gelu(const TensorPtr& x) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
    std::vector<double> d(x->data.size());
    for (size_t i = 0; i < d.size(); ++i) {
        const double v = x->data[i];
        d[i] = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
    }
    auto y = Tensor::create(x->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, inv_sqrt2, inv_sqrt2pi] {
        x->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i) {
            const double v = x->data[i];
            const double phi = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
            x->grad[i] += yp->grad[i] * (phi + v * pdf);
        }
    });
    return y;
}

TensorPtr tanh_op(const TensorPtr& x) {
    std::vector<double> d(x->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = std::tanh(x->data[i]);
    auto y = Tensor::create(x->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {x}, [yp, x] {
        x->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i)
            x->grad[i] += yp->grad[i] * (1.0 - yp->data[i] * yp->data[i]);
    });
    return y;
}

TensorPtr relu(const TensorPtr& x) {
    std::vector<double> d(x->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    auto y = Tensor::create(x->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {x}, [yp, x] {
        x->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i)
            if (x->data[i] > 0.0) x->grad[i] += yp->grad[i];
    });
    return y;
}

namespace {
void axis_strides(const Shape& s, int axis, int64_t& outer, int64_t& n, int64_t& inner) {
    if (axis < 0) axis += static_cast<int>(s.size());
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw dimension_error("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    outer = 1;
    inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    n = s[axis];
    for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}
}  // namespace

TensorPtr softmax(const TensorPtr& x, int axis) {
    int64_t outer, n, inner;
    axis_strides(x->shape, axis, outer, n, inner);
    if (n < 1) throw dimension_error("softmax: empty axis in " + shape_str(x->shape));
    std::vector<double> d(x->data.size());
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * n * inner + in;
            double mx = -1e300;
            for (int64_t i = 0; i < n; ++i) mx = std::max(mx, x->data[base + i * inner]);
            double sum = 0.0;
            for (int64_t i = 0; i < n; ++i) {
                const double e = std::exp(x->data[base + i * inner] - mx);
                d[base + i * inner] = e;
                sum += e;
            }
            for (int64_t i = 0; i < n; ++i) d[base + i * inner] /= sum;
        }
    }
    auto y = Tensor::create(x->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, outer, n, inner] {
        x->ensure_grad();
        for (int64_t o = 0; o < outer; ++o) {
            for (int64_t in = 0; in < inner; ++in) {
                const int64_t base = o * n * inner + in;
                double dot = 0.0;
                for (int64_t i = 0; i < n; ++i)
                    dot += yp->grad[base + i * inner] * yp->data[base + i * inner];
                for (int64_t i = 0; i < n; ++i)
                    x->grad[base + i * inner] +=
                        yp->data[base + i * inner] * (yp->grad[base + i * inner] - dot);
            }
        }
    });
    return y;
}

TensorPtr layernorm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta, double eps) {
    if (x->shape.empty()) throw dimension_error("layernorm: rank-0 input");
    const int64_t d = x->shape.back();
    if (gamma->numel() != d || beta->numel() != d)
        throw dimension_error("layernorm: affine params " + shape_str(gamma->shape) +
                              " do not match feature dim " + std::to_string(d));
    const int64_t rows = x->numel() / d;
    std::vector<double> out(x->data.size());
    std::vector<double> mean(rows), rstd(rows);
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x->data.data() + r * d;
        double mu = 0.0;
        for (int64_t i = 0; i < d; ++i) mu += xr[i];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (int64_t i = 0; i < d; ++i) var += (xr[i] - mu) * (xr[i] - mu);
        var /= static_cast<double>(d);
        const double rs = 1.0 / std::sqrt(var + eps);
        mean[r] = mu;
        rstd[r] = rs;
        for (int64_t i = 0; i < d; ++i)
            out[r * d + i] = gamma->data[i] * (xr[i] - mu) * rs + beta->data[i];
    }
    auto y = Tensor::create(x->shape, std::move(out));
    Tensor* yp = y.get();
    record(y, {x, gamma, beta}, [yp, x, gamma, beta, rows, d, mean, rstd] {
        x->ensure_grad();
        gamma->ensure_grad();
        beta->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const double* xr = x->data.data() + r * d;
            const double* gy = yp->grad.data() + r * d;
            const double mu = mean[r], rs = rstd[r];
            double sum_gh = 0.0, sum_ghx = 0.0;
            for (int64_t i = 0; i < d; ++i) {
                const double xhat = (xr[i] - mu) * rs;
                const double gh = gy[i] * gamma->data[i];
                sum_gh += gh;
                sum_ghx += gh * xhat;
                gamma->grad[i] += gy[i] * xhat;
                beta->grad[i] += gy[i];
            }
            const double inv_d = 1.0 / static_cast<double>(d);
            for (int64_t i = 0; i < d; ++i) {
                const double xhat = (xr[i] - mu) * rs;
                const double gh = gy[i] * gamma->data[i];
                x->grad[r * d + i] += rs * (gh - inv_d * sum_gh - xhat * inv_d * sum_ghx);
            }
        }
    });
    return y;
}

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int64_t sh, int64_t sw, int64_t ph, int64_t pw, int64_t groups) {
    if (x->shape.size() != 3 || w->shape.size() != 4)
        throw dimension_error("conv2d: expect x[C,H,W], w[Cout,Cin/g,kh,kw], got " +
                              shape_str(x->shape) + " and " + shape_str(w->shape));
    const int64_t cin = x->shape[0], h = x->shape[1], wd = x->shape[2];
    const int64_t cout = w->shape[0], cing = w->shape[1], kh = w->shape[2], kw = w->shape[3];
    if (cin % groups != 0 || cout % groups != 0 || cing != cin / groups)
        throw config_error("conv2d: group mismatch cin=" + std::to_string(cin) +
                           " cout=" + std::to_string(cout) + " groups=" + std::to_string(groups));
    const int64_t hout = (h + 2 * ph - kh) / sh + 1;
    const int64_t wout = (wd + 2 * pw - kw) / sw + 1;
    if (hout <= 0 || wout <= 0)
        throw config_error("conv2d: non-positive output dims for input " + shape_str(x->shape));
    const int64_t coutg = cout / groups;
    const int64_t kdim = cing * kh * kw;
    const int64_t sp = hout * wout;

    auto col = std::make_shared<std::vector<double>>(static_cast<size_t>(groups * kdim * sp));
    auto y = Tensor::zeros({cout, hout, wout});
    for (int64_t g = 0; g < groups; ++g) {
        double* colg = col->data() + g * kdim * sp;
        kernels::im2col(x->data.data() + g * cing * h * wd, colg, cing, h, wd,
                        kh, kw, sh, sw, ph, pw, hout, wout);
        kernels::matmul(w->data.data() + g * coutg * kdim, colg,
                        y->data.data() + g * coutg * sp, coutg, kdim, sp);
    }
    if (b) {
        if (b->numel() != cout)
            throw dimension_error("conv2d: bias " + shape_str(b->shape) + " vs cout " + std::to_string(cout));
        for (int64_t c = 0; c < cout; ++c)
            for (int64_t i = 0; i < sp; ++i) y->data[c * sp + i] += b->data[c];
    }
    Tensor* yp = y.get();
    std::vector<TensorPtr> parents = b ? std::vector<TensorPtr>{x, w, b} : std::vector<TensorPtr>{x, w};
    record(y, std::move(parents),
           [yp, x, w, b, col, cin, h, wd, cout, cing, kh, kw, sh, sw, ph, pw, groups, hout, wout] {
               const int64_t coutg = cout / groups;
               const int64_t kdim = cing * kh * kw;
               const int64_t sp = hout * wout;
               x->ensure_grad();
               w->ensure_grad();
               std::vector<double> dcol(static_cast<size_t>(kdim * sp));
               for (int64_t g = 0; g < groups; ++g) {
                   const double* dy = yp->grad.data() + g * coutg * sp;
                   const double* colg = col->data() + g * kdim * sp;
                   // dW += dY col^T
                   kernels::matmul_nt_acc(dy, colg, w->grad.data() + g * coutg * kdim,
                                          coutg, sp, kdim);
                   // dcol = W^T dY
                   std::fill(dcol.begin(), dcol.end(), 0.0);
                   kernels::matmul_tn_acc(w->data.data() + g * coutg * kdim, dy, dcol.data(),
                                          coutg, kdim, sp);
                   kernels::col2im_acc(dcol.data(), x->grad.data() + g * cing * h * wd, cing, h, wd,
                                       kh, kw, sh, sw, ph, pw, hout, wout);
               }
               if (b) {
                   b->ensure_grad();
                   for (int64_t c = 0; c < cout; ++c)
                       for (int64_t i = 0; i < sp; ++i) b->grad[c] += yp->grad[c * sp + i];
               }
           });
    return y;
}

TensorPtr conv1d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int64_t stride, int64_t pad, int64_t groups) {
    if (x->shape.size() != 2 || w->shape.size() != 3)
        throw dimension_error("conv1d: expect x[C,L], w[Cout,Cin/g,k], got " +
                              shape_str(x->shape) + " and " + shape_str(w->shape));
    auto x2 = reshape(x, {x->shape[0], 1, x->shape[1]});
    auto w2 = reshape(w, {w->shape[0], w->shape[1], 1, w->shape[2]});
    auto y2 = conv2d(x2, w2, b, 1, stride, 0, pad, groups);
    return reshape(y2, {y2->shape[0], y2->shape[2]});
}

TensorPtr concat(const std::vector<TensorPtr>& xs, int axis) {
    if (xs.empty()) throw dimension_error("concat: empty input list");
    Shape s = xs[0]->shape;
    if (axis < 0) axis += static_cast<int>(s.size());
    int64_t total = 0;
    for (const auto& x : xs) {
        if (x->shape.size() != s.size())
            throw dimension_error("concat: rank mismatch");
        for (size_t i = 0; i < s.size(); ++i)
            if (static_cast<int>(i) != axis && x->shape[i] != s[i])
                throw dimension_error("concat: shape mismatch " + shape_str(x->shape) + " vs " +
                                      shape_str(s));
        total += x->shape[axis];
    }
    s[axis] = total;
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];

    auto y = Tensor::zeros(s);
    int64_t off = 0;
    for (const auto& x : xs) {
        const int64_t nx = x->shape[axis];
        for (int64_t o = 0; o < outer; ++o)
            std::copy_n(x->data.data() + o * nx * inner, nx * inner,
                        y->data.data() + (o * total + off) * inner);
        off += nx;
    }
    Tensor* yp = y.get();
    record(y, xs, [yp, xs, axis, outer, inner, total] {
        int64_t off = 0;
        for (const auto& x : xs) {
            x->ensure_grad();
            const int64_t nx = x->shape[axis];
            for (int64_t o = 0; o < outer; ++o) {
                const double* g = yp->grad.data() + (o * total + off) * inner;
                double* xg = x->grad.data() + o * nx * inner;
                for (int64_t i = 0; i < nx * inner; ++i) xg[i] += g[i];
            }
            off += nx;
        }
    });
    return y;
}

TensorPtr slice(const TensorPtr& x, int axis, int64_t start, int64_t len) {
    Shape s = x->shape;
    if (axis < 0) axis += static_cast<int>(s.size());
    if (axis < 0 || axis >= static_cast<int>(s.size()) || start < 0 || len < 0 ||
        start + len > s[axis])
        throw dimension_error("slice: range [" + std::to_string(start) + "," +
                              std::to_string(start + len) + ") invalid for axis " +
                              std::to_string(axis) + " of " + shape_str(s));
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const int64_t n = s[axis];
    Shape ys = s;
    ys[axis] = len;
    auto y = Tensor::zeros(ys);
    for (int64_t o = 0; o < outer; ++o)
        std::copy_n(x->data.data() + (o * n + start) * inner, len * inner,
                    y->data.data() + o * len * inner);
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, outer, inner, n, start, len] {
        x->ensure_grad();
        for (int64_t o = 0; o < outer; ++o) {
            const double* g = yp->grad.data() + o * len * inner;
            double* xg = x->grad.data() + (o * n + start) * inner;
            for (int64_t i = 0; i < len * inner; ++i) xg[i] += g[i];
        }
    });
    return y;
}

TensorPtr reshape(const TensorPtr& x, Shape s) {
    if (numel(s) != x->numel())
        throw dimension_error("reshape: " + shape_str(x->shape) + " to " + shape_str(s) +
                              " changes element count");
    auto y = Tensor::create(std::move(s), x->data);
    Tensor* yp = y.get();
    record(y, {x}, [yp, x] {
        x->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i) x->grad[i] += yp->grad[i];
    });
    return y;
}

TensorPtr stack_rows(const std::vector<TensorPtr>& rows) {
    if (rows.empty()) throw dimension_error("stack_rows: empty input");
    const int64_t d = rows[0]->numel();
    const int64_t n = static_cast<int64_t>(rows.size());
    auto y = Tensor::zeros({n, d});
    for (int64_t i = 0; i < n; ++i) {
        if (rows[i]->numel() != d) throw dimension_error("stack_rows: ragged rows");
        std::copy_n(rows[i]->data.data(), d, y->data.data() + i * d);
    }
    Tensor* yp = y.get();
    record(y, rows, [yp, rows, d] {
        for (size_t i = 0; i < rows.size(); ++i) {
            rows[i]->ensure_grad();
            for (int64_t j = 0; j < d; ++j) rows[i]->grad[j] += yp->grad[i * d + j];
        }
    });
    return y;
}

TensorPtr mean_axis(const TensorPtr& x, int axis) {
    int64_t outer, n, inner;
    axis_strides(x->shape, axis, outer, n, inner);
    if (axis < 0) axis += static_cast<int>(x->shape.size());
    Shape ys;
    for (size_t i = 0; i < x->shape.size(); ++i)
        if (static_cast<int>(i) != axis) ys.push_back(x->shape[i]);
    if (ys.empty()) ys = {1};
    auto y = Tensor::zeros(ys);
    const double inv = 1.0 / static_cast<double>(n);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < n; ++i)
            for (int64_t in = 0; in < inner; ++in)
                y->data[o * inner + in] += x->data[(o * n + i) * inner + in] * inv;
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, outer, n, inner, inv] {
        x->ensure_grad();
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < n; ++i)
                for (int64_t in = 0; in < inner; ++in)
                    x->grad[(o * n + i) * inner + in] += yp->grad[o * inner + in] * inv;
    });
    return y;
}

TensorPtr mean_all(const TensorPtr& x) {
    const double inv = 1.0 / static_cast<double>(x->numel());
    double s = 0.0;
    for (double v : x->data) s += v;
    auto y = Tensor::scalar(s * inv);
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, inv] {
        x->ensure_grad();
        for (auto& g : x->grad) g += yp->grad[0] * inv;
    });
    return y;
}

TensorPtr sum_all(const TensorPtr& x) {
    double s = 0.0;
    for (double v : x->data) s += v;
    auto y = Tensor::scalar(s);
    Tensor* yp = y.get();
    record(y, {x}, [yp, x] {
        x->ensure_grad();
        for (auto& g : x->grad) g += yp->grad[0];
    });
    return y;
}

TensorPtr adaptive_avg_pool1d(const TensorPtr& x, int64_t p) {
    if (x->shape.size() != 2) throw dimension_error("adaptive_avg_pool1d: need [d,L]");
    const int64_t d = x->shape[0], l = x->shape[1];
    if (p < 1 || l < 1) throw dimension_error("adaptive_avg_pool1d: empty axis");
    auto y = Tensor::zeros({d, p});
    std::vector<int64_t> s0(p), s1(p);
    for (int64_t i = 0; i < p; ++i) {
        s0[i] = i * l / p;
        s1[i] = ((i + 1) * l + p - 1) / p;  // ceil
    }
    for (int64_t c = 0; c < d; ++c)
        for (int64_t i = 0; i < p; ++i) {
            double acc = 0.0;
            for (int64_t j = s0[i]; j < s1[i]; ++j) acc += x->data[c * l + j];
            y->data[c * p + i] = acc / static_cast<double>(s1[i] - s0[i]);
        }
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, d, l, p, s0, s1] {
        x->ensure_grad();
        for (int64_t c = 0; c < d; ++c)
            for (int64_t i = 0; i < p; ++i) {
                const double g = yp->grad[c * p + i] / static_cast<double>(s1[i] - s0[i]);
                for (int64_t j = s0[i]; j < s1[i]; ++j) x->grad[c * l + j] += g;
            }
    });
    return y;
}

TensorPtr resample_linear(const TensorPtr& x, int64_t k) {
    if (x->shape.size() != 2) throw dimension_error("resample_linear: need [d,L]");
    const int64_t d = x->shape[0], l = x->shape[1];
    auto y = Tensor::zeros({d, k});
    std::vector<int64_t> i0(k), i1(k);
    std::vector<double> w1(k);
    for (int64_t i = 0; i < k; ++i) {
        const double u = (k == 1) ? 0.0 : static_cast<double>(i) * (l - 1) / static_cast<double>(k - 1);
        i0[i] = static_cast<int64_t>(std::floor(u));
        i1[i] = std::min(i0[i] + 1, l - 1);
        w1[i] = u - static_cast<double>(i0[i]);
    }
    for (int64_t c = 0; c < d; ++c)
        for (int64_t i = 0; i < k; ++i)
            y->data[c * k + i] =
                (1.0 - w1[i]) * x->data[c * l + i0[i]] + w1[i] * x->data[c * l + i1[i]];
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, d, l, k, i0, i1, w1] {
        x->ensure_grad();
        for (int64_t c = 0; c < d; ++c)
            for (int64_t i = 0; i < k; ++i) {
                const double g = yp->grad[c * k + i];
                x->grad[c * l + i0[i]] += (1.0 - w1[i]) * g;
                x->grad[c * l + i1[i]] += w1[i] * g;
            }
    });
    return y;
}

TensorPtr cumsum(const TensorPtr& x) {
    if (x->shape.size() != 1) throw dimension_error("cumsum: need rank-1 input");
    const int64_t n = x->shape[0];
    std::vector<double> d(n);
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        acc += x->data[i];
        d[i] = acc;
    }
    auto y = Tensor::create({n}, std::move(d));
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, n] {
        x->ensure_grad();
        double acc = 0.0;
        for (int64_t i = n - 1; i >= 0; --i) {
            acc += yp->grad[i];
            x->grad[i] += acc;
        }
    });
    return y;
}

TensorPtr div_by_scalar(const TensorPtr& x, const TensorPtr& s) {
    if (s->numel() != 1) throw dimension_error("div_by_scalar: divisor must be scalar");
    const double sv = s->data[0];
    std::vector<double> d(x->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = x->data[i] / sv;
    auto y = Tensor::create(x->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {x, s}, [yp, x, s, sv] {
        x->ensure_grad();
        s->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i) {
            x->grad[i] += yp->grad[i] / sv;
            s->grad[0] -= yp->grad[i] * x->data[i] / (sv * sv);
        }
    });
    return y;
}

TensorPtr dropout(const TensorPtr& x, double p, Rng& rng, bool training) {
    if (!training || p <= 0.0) return x;
    const double keep = 1.0 - p;
    auto mask = std::make_shared<std::vector<double>>(x->data.size());
    std::vector<double> d(x->data.size());
    for (size_t i = 0; i < d.size(); ++i) {
        const double m = rng.uniform() < p ? 0.0 : 1.0 / keep;
        (*mask)[i] = m;
        d[i] = x->data[i] * m;
    }
    auto y = Tensor::create(x->shape, std::move(d));
    Tensor* yp = y.get();
    record(y, {x}, [yp, x, mask] {
        x->ensure_grad();
        for (size_t i = 0; i < yp->grad.size(); ++i) x->grad[i] += yp->grad[i] * (*mask)[i];
    });
    return y;
}

TensorPtr cross_entropy_logits(const TensorPtr& logits, int64_t target) {
    if (logits->shape.size() != 1)
        throw dimension_error("cross_entropy_logits: need rank-1 logits");
    const int64_t n = logits->shape[0];
    if (target < 0 || target >= n)
        throw dimension_error("cross_entropy_logits: target " + std::to_string(target) +
                              " out of range [0," + std::to_string(n) + ")");
    double mx = -1e300;
    for (double v : logits->data) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits->data) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    auto y = Tensor::scalar(lse - logits->data[target]);
    Tensor* yp = y.get();
    record(y, {logits}, [yp, logits, target, mx, sum, n] {
        logits->ensure_grad();
        const double g = yp->grad[0];
        for (int64_t i = 0; i < n; ++i) {
            double p = std::exp(logits->data[i] - mx) / sum;
            if (i == target) p -= 1.0;
            logits->grad[i] += g * p;
        }
    });
    return y;
}

TensorPtr mse(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "mse");
    const double inv = 1.0 / static_cast<double>(a->numel());
    double s = 0.0;
    for (size_t i = 0; i < a->data.size(); ++i) {
        const double d = a->data[i] - b->data[i];
        s += d * d;
    }
    auto y = Tensor::scalar(s * inv);
    Tensor* yp = y.get();
    record(y, {a, b}, [yp, a, b, inv] {
        a->ensure_grad();
        b->ensure_grad();
        const double g = yp->grad[0];
        for (size_t i = 0; i < a->data.size(); ++i) {
            const double d = 2.0 * inv * (a->data[i] - b->data[i]);
            a->grad[i] += g * d;
            b->grad[i] -= g * d;
        }
    });
    return y;
}

TensorPtr roi_align_1x1(const TensorPtr& f, double x0, double y0, double x1, double y1) {
    if (f->shape.size() != 3) throw dimension_error("roi_align_1x1: need F[C,H,W]");
    const int64_t c = f->shape[0], h = f->shape[1], w = f->shape[2];

    // 2x2 interior points per axis; degenerate extents collapse to the center.
    auto axis_points = [](double lo, double hi) {
        std::vector<double> pts;
        if (hi - lo > 0.0) {
            pts = {lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)};
        } else {
            pts = {0.5 * (lo + hi)};
        }
        return pts;
    };
    const auto xs = axis_points(x0, x1);
    const auto ys = axis_points(y0, y1);

    // (index, weight) pairs for clamped bilinear sampling along one axis.
    struct Lerp {
        int64_t i0, i1;
        double w1;
    };
    auto lerp1d = [](double u, int64_t dim, int64_t n) {
        double px = u * static_cast<double>(dim) - 0.5;  // half-pixel alignment
        px = std::clamp(px, 0.0, static_cast<double>(dim - 1));
        Lerp l;
        l.i0 = static_cast<int64_t>(std::floor(px));
        l.i1 = std::min(l.i0 + 1, dim - 1);
        l.w1 = px - static_cast<double>(l.i0);
        (void)n;
        return l;
    };

    std::vector<Lerp> lx, ly;
    for (double u : xs) lx.push_back(lerp1d(u, w, w));
    for (double u : ys) ly.push_back(lerp1d(u, h, h));
    const double inv = 1.0 / static_cast<double>(xs.size() * ys.size());

    auto y = Tensor::zeros({c});
    for (int64_t ch = 0; ch < c; ++ch) {
        const double* fc = f->data.data() + ch * h * w;
        double acc = 0.0;
        for (const auto& py : ly)
            for (const auto& px : lx) {
                const double v00 = fc[py.i0 * w + px.i0];
                const double v01 = fc[py.i0 * w + px.i1];
                const double v10 = fc[py.i1 * w + px.i0];
                const double v11 = fc[py.i1 * w + px.i1];
                acc += (1 - py.w1) * ((1 - px.w1) * v00 + px.w1 * v01) +
                       py.w1 * ((1 - px.w1) * v10 + px.w1 * v11);
            }
        y->data[ch] = acc * inv;
    }
    Tensor* yp = y.get();
    record(y, {f}, [yp, f, c, h, w, lx, ly, inv] {
        f->ensure_grad();
        for (int64_t ch = 0; ch < c; ++ch) {
            double* gc = f->grad.data() + ch * h * w;
            const double g = yp->grad[ch] * inv;
            for (const auto& py : ly)
                for (const auto& px : lx) {
                    gc[py.i0 * w + px.i0] += g * (1 - py.w1) * (1 - px.w1);
                    gc[py.i0 * w + px.i1] += g * (1 - py.w1) * px.w1;
                    gc[py.i1 * w + px.i0] += g * py.w1 * (1 - px.w1);
                    gc[py.i1 * w + px.i1] += g * py.w1 * px.w1;
                }
        }
    });
    return y;
}

}  // namespace fasttab::ops
