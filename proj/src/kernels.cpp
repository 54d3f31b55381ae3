#include "fasttab/kernels.hpp"

#include <cstdlib>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fasttab::kernels {

int thread_count() {
#ifdef _OPENMP
    static int cached = [] {
        int n = omp_get_max_threads();
        if (const char* env = std::getenv("FASTTAB_THREADS")) {
            int cap = std::atoi(env);
            if (cap >= 1 && cap < n) n = cap;
        }
        return n;
    }();
    return cached;
#else
    return 1;
#endif
}

namespace {
inline void mm_row(const double* a, const double* b, double* c, int64_t i, int64_t k, int64_t m,
                   bool accumulate) {
    const double* ai = a + i * k;
    double* ci = c + i * m;
    if (!accumulate) std::memset(ci, 0, sizeof(double) * static_cast<size_t>(m));
    for (int64_t p = 0; p < k; ++p) {
        const double av = ai[p];
        if (av == 0.0) continue;
        const double* bp = b + p * m;
        for (int64_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
}
}  // namespace

void matmul_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
    for (int64_t i = 0; i < n; ++i) mm_row(a, b, c, i, k, m, false);
}

void matmul(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
#ifdef _OPENMP
    if (n * k * m > 32768) {
#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int64_t i = 0; i < n; ++i) mm_row(a, b, c, i, k, m, false);
        return;
    }
#endif
    matmul_serial(a, b, c, n, k, m);
}

void matmul_acc_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
    for (int64_t i = 0; i < n; ++i) mm_row(a, b, c, i, k, m, true);
}

void matmul_acc(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
#ifdef _OPENMP
    if (n * k * m > 32768) {
#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int64_t i = 0; i < n; ++i) mm_row(a, b, c, i, k, m, true);
        return;
    }
#endif
    matmul_acc_serial(a, b, c, n, k, m);
}

void matmul_tn_acc_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
    // c[p,j] += sum_i a[i,p] * b[i,j]; loop order keeps writes row-disjoint in p.
    for (int64_t p = 0; p < k; ++p) {
        double* cp = c + p * m;
        for (int64_t i = 0; i < n; ++i) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            const double* bi = b + i * m;
            for (int64_t j = 0; j < m; ++j) cp[j] += av * bi[j];
        }
    }
}

void matmul_tn_acc(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
#ifdef _OPENMP
    if (n * k * m > 32768) {
#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int64_t p = 0; p < k; ++p) {
            double* cp = c + p * m;
            for (int64_t i = 0; i < n; ++i) {
                const double av = a[i * k + p];
                if (av == 0.0) continue;
                const double* bi = b + i * m;
                for (int64_t j = 0; j < m; ++j) cp[j] += av * bi[j];
            }
        }
        return;
    }
#endif
    matmul_tn_acc_serial(a, b, c, n, k, m);
}

void matmul_nt_acc_serial(const double* a, const double* b, double* c, int64_t n, int64_t m, int64_t k) {
    // c[i,p] += sum_j a[i,j] * b[p,j]
    for (int64_t i = 0; i < n; ++i) {
        const double* ai = a + i * m;
        double* ci = c + i * k;
        for (int64_t p = 0; p < k; ++p) {
            const double* bp = b + p * m;
            double acc = 0.0;
            for (int64_t j = 0; j < m; ++j) acc += ai[j] * bp[j];
            ci[p] += acc;
        }
    }
}

void matmul_nt_acc(const double* a, const double* b, double* c, int64_t n, int64_t m, int64_t k) {
#ifdef _OPENMP
    if (n * k * m > 32768) {
#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            const double* ai = a + i * m;
            double* ci = c + i * k;
            for (int64_t p = 0; p < k; ++p) {
                const double* bp = b + p * m;
                double acc = 0.0;
                for (int64_t j = 0; j < m; ++j) acc += ai[j] * bp[j];
                ci[p] += acc;
            }
        }
        return;
    }
#endif
    matmul_nt_acc_serial(a, b, c, n, m, k);
}

namespace {
inline void im2col_channel(const double* x, double* col, int64_t ci, int64_t h, int64_t w,
                           int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
                           int64_t hout, int64_t wout) {
    const double* xc = x + ci * h * w;
    double* dst = col + ci * kh * kw * hout * wout;
    for (int64_t dy = 0; dy < kh; ++dy) {
        for (int64_t dx = 0; dx < kw; ++dx) {
            for (int64_t oy = 0; oy < hout; ++oy) {
                const int64_t iy = oy * sh - ph + dy;
                const bool yin = iy >= 0 && iy < h;
                for (int64_t ox = 0; ox < wout; ++ox) {
                    const int64_t ix = ox * sw - pw + dx;
                    *dst++ = (yin && ix >= 0 && ix < w) ? xc[iy * w + ix] : 0.0;
                }
            }
        }
    }
}
}  // namespace

void im2col_serial(const double* x, double* col, int64_t c, int64_t h, int64_t w,
                   int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
                   int64_t hout, int64_t wout) {
    for (int64_t ci = 0; ci < c; ++ci)
        im2col_channel(x, col, ci, h, w, kh, kw, sh, sw, ph, pw, hout, wout);
}

void im2col(const double* x, double* col, int64_t c, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
            int64_t hout, int64_t wout) {
#ifdef _OPENMP
    if (c > 1 && c * kh * kw * hout * wout > 16384) {
#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int64_t ci = 0; ci < c; ++ci)
            im2col_channel(x, col, ci, h, w, kh, kw, sh, sw, ph, pw, hout, wout);
        return;
    }
#endif
    im2col_serial(x, col, c, h, w, kh, kw, sh, sw, ph, pw, hout, wout);
}

void col2im_acc(const double* col, double* x, int64_t c, int64_t h, int64_t w,
                int64_t kh, int64_t kw, int64_t sh, int64_t sw, int64_t ph, int64_t pw,
                int64_t hout, int64_t wout) {
    const double* src = col;
    for (int64_t ci = 0; ci < c; ++ci) {
        double* xc = x + ci * h * w;
        for (int64_t dy = 0; dy < kh; ++dy) {
            for (int64_t dx = 0; dx < kw; ++dx) {
                for (int64_t oy = 0; oy < hout; ++oy) {
                    const int64_t iy = oy * sh - ph + dy;
                    const bool yin = iy >= 0 && iy < h;
                    for (int64_t ox = 0; ox < wout; ++ox) {
                        const int64_t ix = ox * sw - pw + dx;
                        if (yin && ix >= 0 && ix < w) xc[iy * w + ix] += *src;
                        ++src;
                    }
                }
            }
        }
    }
}

}  // namespace fasttab::kernels
