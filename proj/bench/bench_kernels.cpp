// Compares the OpenMP kernels against the serial reference: same outputs
// (bit-identical by design), different wall time.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "fasttab/kernels.hpp"
#include "fasttab/rng.hpp"

using namespace fasttab;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_best_of(int reps, F&& fn) {
    double best = 1e30;
    for (int i = 0; i < reps; ++i) {
        const double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

void fill(std::vector<double>& v, Rng& rng) {
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
}

}  // namespace

int main() {
    Rng rng(1234);
    std::printf("threads: %d\n\n", kernels::thread_count());
    std::printf("%-28s %10s %10s %8s  %s\n", "kernel", "serial ms", "omp ms", "speedup",
                "bit-identical");

    for (int64_t n : {64, 128, 256, 512}) {
        std::vector<double> a(n * n), b(n * n), c1(n * n), c2(n * n);
        fill(a, rng);
        fill(b, rng);
        const double ts =
            time_best_of(3, [&] { kernels::matmul_serial(a.data(), b.data(), c1.data(), n, n, n); });
        const double tp =
            time_best_of(3, [&] { kernels::matmul(a.data(), b.data(), c2.data(), n, n, n); });
        const bool same = std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0;
        char name[64];
        std::snprintf(name, sizeof(name), "matmul %lldx%lldx%lld", (long long)n, (long long)n,
                      (long long)n);
        std::printf("%-28s %10.3f %10.3f %8.2fx  %s\n", name, ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }

    for (int64_t hw : {64, 128, 256}) {
        const int64_t c = 16, kh = 3, kw = 3, sh = 1, sw = 1, ph = 1, pw = 1;
        const int64_t hout = hw, wout = hw;
        std::vector<double> x(c * hw * hw), col1(c * kh * kw * hout * wout), col2(col1.size());
        fill(x, rng);
        const double ts = time_best_of(3, [&] {
            kernels::im2col_serial(x.data(), col1.data(), c, hw, hw, kh, kw, sh, sw, ph, pw, hout,
                                   wout);
        });
        const double tp = time_best_of(3, [&] {
            kernels::im2col(x.data(), col2.data(), c, hw, hw, kh, kw, sh, sw, ph, pw, hout, wout);
        });
        const bool same =
            std::memcmp(col1.data(), col2.data(), col1.size() * sizeof(double)) == 0;
        char name[64];
        std::snprintf(name, sizeof(name), "im2col 16x%lldx%lld k3", (long long)hw, (long long)hw);
        std::printf("%-28s %10.3f %10.3f %8.2fx  %s\n", name, ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }
    return 0;
}
