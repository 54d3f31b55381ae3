#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fasttab/curved.hpp"
#include "fasttab/gradcheck.hpp"
#include "fasttab/grid_span.hpp"
#include "fasttab/ops.hpp"

using namespace fasttab;

namespace {

TensorPtr randn(Shape s, Rng& rng, bool rg = true) {
    std::vector<double> d(static_cast<size_t>(numel(s)));
    for (auto& v : d) v = rng.normal();
    return Tensor::create(std::move(s), std::move(d), rg);
}

}  // namespace

TEST_CASE("default_curve_bound is half the smallest interval") {
    GridSpec g;
    g.R = 2;
    g.C = 2;
    g.y = {0, 0.3, 1};
    g.x = {0, 0.6, 1};
    CHECK(default_curve_bound(g) == doctest::Approx(0.15));
    CHECK(default_curve_bound(GridSpec::uniform(4, 2)) == doctest::Approx(0.125));
}

TEST_CASE("decode_curved_axis zero offsets reproduce the straight grid") {
    NoGradGuard ng;
    const std::vector<double> base = {0, 0.25, 0.6, 1.0};
    auto off = Tensor::zeros({4, 8});
    auto poly = decode_curved_axis(base, off, 0.1);
    REQUIRE(poly->shape == Shape{4, 8});
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 8; ++k) CHECK(poly->data[i * 8 + k] == doctest::Approx(base[i]));
}

TEST_CASE("outer boundaries stay pinned whatever the offsets say") {
    NoGradGuard ng;
    Rng rng(1);
    auto off = randn({3, 16}, rng, false);
    auto poly = decode_curved_axis({0, 0.5, 1.0}, off, 0.2);
    for (int k = 0; k < 16; ++k) {
        CHECK(poly->data[k] == 0.0);
        CHECK(poly->data[2 * 16 + k] == 1.0);
    }
}

TEST_CASE("tanh residual saturates at base plus/minus bound") {
    NoGradGuard ng;
    auto hi = Tensor::full({3, 4}, 50.0);
    auto poly = decode_curved_axis({0, 0.5, 1.0}, hi, 0.2);
    for (int k = 0; k < 4; ++k) CHECK(poly->data[4 + k] == doctest::Approx(0.7).epsilon(1e-9));
    auto lo = Tensor::full({3, 4}, -50.0);
    auto poly2 = decode_curved_axis({0, 0.5, 1.0}, lo, 0.2);
    for (int k = 0; k < 4; ++k) CHECK(poly2->data[4 + k] == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("a known offset produces a known boundary value") {
    NoGradGuard ng;
    // base 0.5, bound 0.1, offset atanh(0.5) -> 0.5 + 0.1*0.5 = 0.55
    auto off = Tensor::full({3, 4}, std::atanh(0.5));
    auto poly = decode_curved_axis({0, 0.5, 1.0}, off, 0.1);
    for (int k = 0; k < 4; ++k) CHECK(poly->data[4 + k] == doctest::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("decode_curved uses the default bound and validates the base") {
    NoGradGuard ng;
    auto base = GridSpec::uniform(2, 2);
    auto ro = Tensor::full({3, 4}, 100.0);
    auto co = Tensor::zeros({3, 4});
    auto d = decode_curved(base, ro, co);
    // default bound 0.25, saturated tanh -> middle row boundary near 0.75
    CHECK(d.row_poly->data[4] == doctest::Approx(0.75).epsilon(1e-9));

    GridSpec bad;
    bad.R = 2;
    bad.C = 2;
    bad.y = {0, 0.5, 0.9};  // endpoint != 1
    bad.x = {0, 0.5, 1};
    CHECK_THROWS_AS(decode_curved(bad, ro, co), config_error);
}

TEST_CASE("offsets tensor may carry more rows than boundaries") {
    NoGradGuard ng;
    auto off = Tensor::zeros({5, 4});  // R_max+1 rows, only 3 used
    auto poly = decode_curved_axis({0, 0.5, 1.0}, off, 0.1);
    CHECK(poly->shape == Shape{3, 4});
    CHECK_THROWS_AS(decode_curved_axis({0, 0.2, 0.4, 0.6, 0.8, 1.0}, off, 0.1), dimension_error);
}

TEST_CASE("smoothness penalty oracles") {
    NoGradGuard ng;
    // affine polylines have zero second difference
    auto aff = Tensor::create({2, 4}, {0, 1, 2, 3, 5, 5, 5, 5});
    CHECK(smoothness_penalty(aff)->item() == doctest::Approx(0.0));

    // (0, 0.1, 0): d2 = 0 - 0.2 + 0 = -0.2 -> 0.04
    auto bump = Tensor::create({1, 3}, {0, 0.1, 0});
    CHECK(smoothness_penalty(bump)->item() == doctest::Approx(0.04));

    // degree-2 homogeneity: scaling values by s scales the penalty by s^2
    Rng rng(2);
    auto p = randn({3, 7}, rng, false);
    auto p3 = Tensor::create({3, 7}, [&] {
        std::vector<double> v = p->data;
        for (auto& x : v) x *= 3.0;
        return v;
    }());
    CHECK(smoothness_penalty(p3)->item() ==
          doctest::Approx(9.0 * smoothness_penalty(p)->item()).epsilon(1e-9));

    // fewer than 3 sample points: nothing to measure
    CHECK(smoothness_penalty(Tensor::create({2, 2}, {0, 1, 2, 3}))->item() == 0.0);
}

TEST_CASE("non-crossing penalty oracles") {
    NoGradGuard ng;
    // properly ordered boundaries are free
    auto ok = Tensor::create({3, 2}, {0, 0, 0.5, 0.6, 1, 1});
    CHECK(non_crossing_penalty(ok)->item() == doctest::Approx(0.0));

    // a 0.1 inversion at one sample point costs 0.01
    auto bad = Tensor::create({2, 2}, {0.5, 0.7, 0.4, 0.8});
    CHECK(non_crossing_penalty(bad)->item() == doctest::Approx(0.01));

    // touching boundaries are allowed
    auto touch = Tensor::create({2, 3}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK(non_crossing_penalty(touch)->item() == doctest::Approx(0.0));

    // single polyline: no pair to compare
    CHECK(non_crossing_penalty(Tensor::create({1, 4}, {0.9, 0.1, 0.8, 0.2}))->item() == 0.0);
}

TEST_CASE("curved_cell_rect equals grid_cells at zero offsets") {
    NoGradGuard ng;
    GridSpec g;
    g.R = 2;
    g.C = 2;
    g.y = {0, 0.3, 1};
    g.x = {0, 0.6, 1};
    auto d = decode_curved(g, Tensor::zeros({3, 8}), Tensor::zeros({3, 8}));
    auto cg = curved_grid_values(g, d);
    auto cells = grid_cells(g);
    for (const auto& cell : cells) {
        auto rect = curved_cell_rect(cg, cell.r, cell.c);
        CHECK(rect.x0 == doctest::Approx(cell.x0));
        CHECK(rect.y0 == doctest::Approx(cell.y0));
        CHECK(rect.x1 == doctest::Approx(cell.x1));
        CHECK(rect.y1 == doctest::Approx(cell.y1));
    }
}

TEST_CASE("curved_cell_rect expands to the extreme of a dipping boundary") {
    GridSpec g = GridSpec::uniform(2, 1);
    CurvedGrid cg;
    cg.base = g;
    cg.K = 3;
    // middle row boundary dips down to 0.45 at the central sample point
    cg.row_poly = {0, 0, 0, 0.5, 0.45, 0.5, 1, 1, 1};
    cg.col_poly = {0, 0, 0, 1, 1, 1};
    auto top = curved_cell_rect(cg, 0, 0);
    CHECK(top.y0 == doctest::Approx(0.0));
    CHECK(top.y1 == doctest::Approx(0.5));  // max of the lower edge
    auto bot = curved_cell_rect(cg, 1, 0);
    CHECK(bot.y0 == doctest::Approx(0.45));  // min of the upper edge
    CHECK(bot.y1 == doctest::Approx(1.0));
    CHECK_THROWS_AS(curved_cell_rect(cg, 2, 0), dimension_error);
}

TEST_CASE("curved penalties are differentiable through the decode") {
    Rng rng(3);
    for (int t = 0; t < 5; ++t) {
        auto off = randn({4, 6}, rng);
        auto rep = grad_check(
            [&] {
                auto poly = decode_curved_axis({0, 0.3, 0.7, 1.0}, off, 0.4);
                return ops::add(smoothness_penalty(poly),
                                ops::scale(non_crossing_penalty(poly), 0.5));
            },
            {{"off", off}});
        CHECK(rep.max_rel_error < 1e-3);
    }
}

TEST_CASE("curved_offsets shapes and linearity in the weights") {
    NoGradGuard ng;
    Rng rng(4);
    auto enc = randn({4, 5}, rng, false);  // [d_seq, L]
    auto w = randn({3, 4}, rng, false);    // [(max+1), d_seq]
    auto b = Tensor::zeros({3});
    auto off = curved_offsets(enc, w, b, 9);
    CHECK(off->shape == Shape{3, 9});

    auto off0 = curved_offsets(enc, Tensor::zeros({3, 4}), b, 9);
    for (double v : off0->data) CHECK(v == 0.0);
}
