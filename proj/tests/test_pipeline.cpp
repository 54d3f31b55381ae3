#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "fasttab/data.hpp"
#include "fasttab/pipeline.hpp"

using namespace fasttab;

namespace {

ModelConfig tiny_cfg(bool curved = false) {
    ModelConfig cfg;
    cfg.d_model = 4;
    cfg.stage_channels = {2, 2, 4, 4};
    cfg.d_z = 4;
    cfg.T = 2;
    cfg.d_seq = 4;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 8;
    cfg.dropout = 0.0;
    cfg.pos_max_len = 16;
    cfg.mlp_hidden = 8;
    cfg.R_max = 4;
    cfg.C_max = 4;
    cfg.RS_max = 2;
    cfg.CS_max = 2;
    cfg.span_hidden = {4, 4, 4};
    cfg.curved = curved;
    cfg.K = 8;
    return cfg;
}

TensorPtr rand_image(int64_t h, int64_t w, Rng& rng) {
    std::vector<double> d(static_cast<size_t>(3 * h * w));
    for (auto& v : d) v = rng.uniform();
    return Tensor::create({3, h, w}, std::move(d));
}

}  // namespace

TEST_CASE("zero weights collapse to the 1x1 table") {
    Rng rng(1);
    auto m = Model::init(tiny_cfg(), rng);
    for (auto& [name, p] : m.params.tensors) std::fill(p->data.begin(), p->data.end(), 0.0);
    auto res = infer(rand_image(48, 40, rng), m);
    CHECK(res.html == "<table><tbody><tr><td></td></tr></tbody></table>");
    CHECK(res.grid.R == 1);
    CHECK(res.grid.C == 1);
    CHECK(res.grid.H_hdr == 0);
    CHECK(res.grid.y == std::vector<double>{0, 1});
    CHECK_FALSE(res.has_curved);
}

TEST_CASE("inference is deterministic") {
    Rng rng(2);
    auto m = Model::init(tiny_cfg(), rng);
    auto img = rand_image(64, 48, rng);
    auto a = infer(img, m);
    auto b = infer(img, m);
    CHECK(a.html == b.html);
    CHECK(a.grid.y == b.grid.y);
    CHECK(a.grid.x == b.grid.x);
    CHECK(a.structure == b.structure);
}

TEST_CASE("stage timings cover the whole run") {
    Rng rng(3);
    auto m = Model::init(tiny_cfg(), rng);
    auto res = infer(rand_image(96, 96, rng), m);
    REQUIRE(!res.timings.empty());
    CHECK(res.timings.front().name == "encode");
    double sum = 0;
    for (const auto& t : res.timings) {
        CHECK(t.micros >= 0.0);
        sum += t.micros;
    }
    CHECK(sum <= res.total_micros);
    CHECK(sum >= 0.95 * res.total_micros);
}

TEST_CASE("failures carry the stage name") {
    Rng rng(4);
    auto m = Model::init(tiny_cfg(), rng);
    try {
        infer(rand_image(15, 8, rng), m);  // below the encoder minimum
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).rfind("encode:", 0) == 0);
    }
}

TEST_CASE("t_override changes the refinement depth") {
    Rng rng(5);
    auto m = Model::init(tiny_cfg(), rng);
    auto img = rand_image(64, 64, rng);
    InferenceOptions o1;
    o1.t_override = 0;
    InferenceOptions o6;
    o6.t_override = 6;
    // both run; depth 0 skips refinement entirely
    auto r1 = infer(img, m, o1);
    auto r6 = infer(img, m, o6);
    CHECK(!r1.html.empty());
    CHECK(!r6.html.empty());
}

TEST_CASE("curved decode is exposed when requested") {
    Rng rng(6);
    auto m = Model::init(tiny_cfg(true), rng);
    auto img = rand_image(64, 64, rng);
    InferenceOptions oc;
    oc.curved = true;
    auto res = infer(img, m, oc);
    CHECK(res.has_curved);
    CHECK(res.curved.K == 8);
    CHECK(static_cast<int>(res.curved.row_poly.size()) == (res.grid.R + 1) * 8);
    // polylines live in [0,1] with pinned outer boundaries
    for (int k = 0; k < 8; ++k) {
        CHECK(res.curved.row_poly[k] == 0.0);
        CHECK(res.curved.row_poly[static_cast<size_t>(res.grid.R) * 8 + k] == 1.0);
    }

    // asking for curved output without curved parameters is a config error
    auto plain = Model::init(tiny_cfg(false), rng);
    CHECK_THROWS_AS(infer(img, plain, oc), config_error);

    // without the flag the same model emits a straight grid
    auto straight = infer(img, m);
    CHECK_FALSE(straight.has_curved);
}

TEST_CASE("random models and images always produce a valid table") {
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        Rng init(1000 + t);
        auto m = Model::init(tiny_cfg(t % 3 == 0), init);
        const int64_t h = 16 + static_cast<int64_t>(rng.randint(100));
        const int64_t w = 8 + static_cast<int64_t>(rng.randint(100));
        InferenceOptions opt;
        opt.curved = m.cfg.curved && t % 2 == 0;
        auto res = infer(rand_image(h, w, rng), m, opt);
        auto parsed = parse_html_structure(res.html);
        CHECK(parsed == res.structure);
        CHECK(res.grid.R >= 1);
        CHECK(res.grid.R <= m.cfg.R_max);
        CHECK(res.grid.C >= 1);
        CHECK(res.grid.C <= m.cfg.C_max);
        CHECK(res.grid.H_hdr <= res.grid.R);
        for (size_t i = 1; i < res.grid.y.size(); ++i) CHECK(res.grid.y[i] > res.grid.y[i - 1]);
    }
}
