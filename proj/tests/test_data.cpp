#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "fasttab/data.hpp"
#include "fasttab/structure.hpp"

using namespace fasttab;
namespace fs = std::filesystem;

namespace {

double px_at(const TensorPtr& img, int ch, int y, int x) {
    const int h = static_cast<int>(img->shape[1]), w = static_cast<int>(img->shape[2]);
    return img->data[(static_cast<size_t>(ch) * h + y) * w + x];
}

bool row_all(const TensorPtr& img, int y, double v) {
    const int w = static_cast<int>(img->shape[2]);
    for (int ch = 0; ch < 3; ++ch)
        for (int x = 0; x < w; ++x)
            if (px_at(img, ch, y, x) != v) return false;
    return true;
}

SynthSpec uniform_spec(int r, int c, int h = 96, int w = 96, int hdr = 0) {
    SynthSpec sp;
    sp.grid = GridSpec::uniform(r, c, hdr);
    sp.spans.R = r;
    sp.spans.C = c;
    sp.spans.rs.assign(static_cast<size_t>(r) * c, 1);
    sp.spans.cs.assign(static_cast<size_t>(r) * c, 1);
    sp.spans.is_anchor.assign(static_cast<size_t>(r) * c, 1);
    sp.height = h;
    sp.width = w;
    return sp;
}

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("fasttab_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("random_synth_spec always produces a valid sample") {
    Rng rng(1);
    for (int t = 0; t < 500; ++t) {
        auto sp = random_synth_spec(rng, 6, 6, 3, 3);
        sp.grid.validate();
        CHECK(sp.spans.tiles());
        CHECK(sp.grid.H_hdr <= 2);
        // boundaries strictly increasing thanks to the width floor
        for (size_t i = 1; i < sp.grid.y.size(); ++i) CHECK(sp.grid.y[i] > sp.grid.y[i - 1]);
        // spans respect the caps
        for (size_t i = 0; i < sp.spans.rs.size(); ++i)
            if (sp.spans.is_anchor[i]) {
                CHECK(sp.spans.rs[i] <= 3);
                CHECK(sp.spans.cs[i] <= 3);
            }
    }
}

TEST_CASE("render_synthetic is deterministic and leaves text boxes in cells") {
    Rng a(7), b(7);
    auto sp = uniform_spec(3, 3);
    auto s1 = render_synthetic(sp, a, "x");
    auto s2 = render_synthetic(sp, b, "x");
    CHECK(s1.image->data == s2.image->data);
    CHECK(s1.text_boxes == s2.text_boxes);

    // every text box is filled with ink and lies inside the canvas
    for (const auto& box : s1.text_boxes) {
        CHECK(box[0] >= 0);
        CHECK(box[1] >= 0);
        CHECK(box[2] <= sp.width);
        CHECK(box[3] <= sp.height);
        CHECK(px_at(s1.image, 0, box[1], box[0]) == 0.1);
        CHECK(px_at(s1.image, 0, box[3] - 1, box[2] - 1) == 0.1);
    }
}

TEST_CASE("a 1x1 table still gets at least one word block") {
    Rng rng(9);
    auto s = render_synthetic(uniform_spec(1, 1), rng, "one");
    CHECK(!s.text_boxes.empty());
}

TEST_CASE("ruled separators land on the rounded boundary pixels") {
    Rng rng(11);
    auto sp = uniform_spec(3, 3, 96, 96);
    auto s = render_synthetic(sp, rng, "b");
    const int h = 96, w = 96;
    std::set<int> expected_rows, dark_rows;
    for (double v : sp.grid.y) expected_rows.insert(static_cast<int>(std::lround(v * (h - 1))));
    for (int y = 0; y < h; ++y)
        if (row_all(s.image, y, 0.2)) dark_rows.insert(y);
    CHECK(dark_rows == expected_rows);

    std::set<int> expected_cols;
    for (double v : sp.grid.x) expected_cols.insert(static_cast<int>(std::lround(v * (w - 1))));
    for (int x : expected_cols)
        for (int y = 0; y < h; ++y) CHECK(px_at(s.image, 0, y, x) == 0.2);
}

TEST_CASE("header band shades the header rows") {
    Rng rng(13);
    auto sp = uniform_spec(4, 2, 96, 96, 1);
    auto s = render_synthetic(sp, rng, "h");
    // somewhere strictly inside the header, off the separators and any ink
    bool found = false;
    for (int y = 2; y < 22 && !found; ++y)
        for (int x = 2; x < 94 && !found; ++x)
            if (px_at(s.image, 0, y, x) == 0.92) found = true;
    CHECK(found);
}

TEST_CASE("anonymise leaves pixels outside the boxes bit-identical") {
    Rng rng(17);
    auto s = render_synthetic(uniform_spec(3, 3), rng, "a");
    for (auto m : {AnonymMethod::Black, AnonymMethod::Median, AnonymMethod::GaussianBlur,
                   AnonymMethod::Pixelation, AnonymMethod::Mean, AnonymMethod::Noise}) {
        Rng r2(23);
        auto out = anonymise(s.image, s.text_boxes, m, r2);
        const int h = 96, w = 96;
        std::vector<uint8_t> inside(static_cast<size_t>(h) * w, 0);
        for (const auto& b : s.text_boxes)
            for (int y = b[1]; y < b[3]; ++y)
                for (int x = b[0]; x < b[2]; ++x) inside[static_cast<size_t>(y) * w + x] = 1;
        for (int ch = 0; ch < 3; ++ch)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (!inside[static_cast<size_t>(y) * w + x])
                        REQUIRE(px_at(out, ch, y, x) == px_at(s.image, ch, y, x));
    }
}

TEST_CASE("anonymisation method oracles") {
    Rng rng(19);
    // 4x4 image, box covering the left 4x2 half with known values
    auto img = Tensor::full({3, 4, 4}, 0.5);
    for (int ch = 0; ch < 3; ++ch) {
        img->data[(static_cast<size_t>(ch) * 4 + 0) * 4 + 0] = 0.0;
        img->data[(static_cast<size_t>(ch) * 4 + 1) * 4 + 0] = 1.0;
    }
    std::vector<std::array<int, 4>> box = {{0, 0, 2, 4}};

    auto black = anonymise(img, box, AnonymMethod::Black, rng);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 2; ++x) CHECK(px_at(black, 1, y, x) == 0.0);

    // mean over {0, 1, six 0.5s} = 4/8
    auto mean = anonymise(img, box, AnonymMethod::Mean, rng);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 2; ++x) CHECK(px_at(mean, 0, y, x) == doctest::Approx(0.5));

    // median of {0, 1, 0.5 x6} = 0.5
    auto med = anonymise(img, box, AnonymMethod::Median, rng);
    CHECK(px_at(med, 0, 0, 0) == doctest::Approx(0.5));

    // blur of a constant region is the identity
    auto flat = Tensor::full({3, 8, 8}, 0.3);
    std::vector<std::array<int, 4>> fb = {{1, 1, 7, 7}};
    auto blur = anonymise(flat, fb, AnonymMethod::GaussianBlur, rng);
    for (size_t i = 0; i < blur->data.size(); ++i)
        CHECK(blur->data[i] == doctest::Approx(0.3).epsilon(1e-12));

    // pixelation with a box no larger than one block equals the mean
    auto pix = anonymise(img, box, AnonymMethod::Pixelation, rng);
    auto mean2 = anonymise(img, box, AnonymMethod::Mean, rng);
    CHECK(pix->data == mean2->data);

    // noise stays in range, is seeded, and actually changes something
    Rng na(5), nb(5);
    auto n1 = anonymise(img, box, AnonymMethod::Noise, na);
    auto n2 = anonymise(img, box, AnonymMethod::Noise, nb);
    CHECK(n1->data == n2->data);
    bool changed = false;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 2; ++x) {
            const double v = px_at(n1, 0, y, x);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            changed |= v != px_at(img, 0, y, x);
        }
    CHECK(changed);

    // out-of-image boxes are rejected
    std::vector<std::array<int, 4>> bad = {{0, 0, 5, 2}};
    CHECK_THROWS_AS(anonymise(img, bad, AnonymMethod::Black, rng), data_error);
}

TEST_CASE("gaussian blur mixes only pixels of the same box") {
    Rng rng(21);
    // sharp edge inside the box blurs; values remain a convex mix of box content
    auto img = Tensor::full({3, 16, 16}, 1.0);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 4; y < 12; ++y)
            for (int x = 4; x < 8; ++x) img->data[(static_cast<size_t>(ch) * 16 + y) * 16 + x] = 0.0;
    std::vector<std::array<int, 4>> box = {{4, 4, 12, 12}};
    auto out = anonymise(img, box, AnonymMethod::GaussianBlur, rng);
    for (int y = 4; y < 12; ++y)
        for (int x = 4; x < 12; ++x) {
            const double v = px_at(out, 0, y, x);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    // the edge is no longer sharp
    CHECK(px_at(out, 0, 8, 7) > 0.0);
    CHECK(px_at(out, 0, 8, 8) < 1.0);
}

TEST_CASE("rotation by zero is the exact identity with degenerate polylines") {
    Rng a(25), rot_rng(1);
    auto s = render_synthetic(uniform_spec(2, 3), a, "r0");
    auto out = rotate_sample(s, 0.0, rot_rng);
    CHECK(out.image->data == s.image->data);
    CHECK(out.text_boxes == s.text_boxes);
    CHECK(out.has_curved);
    CHECK(out.curved.K == 65);
    for (int i = 0; i <= 2; ++i)
        for (int k = 0; k < 65; ++k)
            CHECK(out.curved.row_poly[static_cast<size_t>(i) * 65 + k] == s.grid.y[i]);
    for (int j = 0; j <= 3; ++j)
        for (int k = 0; k < 65; ++k)
            CHECK(out.curved.col_poly[static_cast<size_t>(j) * 65 + k] == s.grid.x[j]);
}

TEST_CASE("90-degree rotation of a square image permutes pixels") {
    Rng rng(27);
    auto s = render_synthetic(uniform_spec(3, 2, 64, 64), rng, "r90");
    auto out = rotate_sample_theta(s, 90.0);
    const int n = 64;
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 1; y < n - 1; ++y)
            for (int x = 1; x < n - 1; ++x)
                CHECK(px_at(out.image, ch, y, x) ==
                      doctest::Approx(px_at(s.image, ch, n - 1 - x, y)).epsilon(1e-9));
}

TEST_CASE("small-angle rotation keeps normalized polylines in range") {
    Rng rng(29);
    auto s = render_synthetic(uniform_spec(3, 3, 96, 96), rng, "r5");
    auto out = rotate_sample_theta(s, 5.0, 33);
    CHECK(out.has_curved);
    CHECK(out.curved.K == 33);
    double mn = 1e30, mx = -1e30;
    for (double v : out.curved.row_poly) {
        CHECK(v >= -1e-12);
        CHECK(v <= 1.0 + 1e-12);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    // the frame corners define the bounding box, so the extremes are hit
    CHECK(mn == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(mx == doctest::Approx(1.0).epsilon(1e-9));

    // interior boundary polylines stay ordered for small angles
    const int k = out.curved.K;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < k; ++j)
            CHECK(out.curved.row_poly[static_cast<size_t>(i) * k + j] <
                  out.curved.row_poly[static_cast<size_t>(i + 1) * k + j]);

    // rotated text boxes survive clipping
    CHECK(!out.text_boxes.empty());
    for (const auto& b : out.text_boxes) {
        CHECK(b[0] >= 0);
        CHECK(b[2] <= 96);
        CHECK(b[1] >= 0);
        CHECK(b[3] <= 96);
        CHECK(b[2] > b[0]);
        CHECK(b[3] > b[1]);
    }
}

TEST_CASE("ppm round trip quantizes to 8 bits") {
    Rng rng(31);
    auto s = render_synthetic(uniform_spec(2, 2, 32, 24), rng, "ppm");
    auto dir = temp_dir("ppm");
    const auto path = (dir / "img.ppm").string();
    write_ppm(path, s.image);
    auto back = read_ppm(path);
    REQUIRE(back->shape == s.image->shape);
    for (size_t i = 0; i < back->data.size(); ++i) {
        const double q = std::lround(s.image->data[i] * 255.0) / 255.0;
        CHECK(back->data[i] == doctest::Approx(q).epsilon(1e-12));
    }
    fs::remove_all(dir);
}

TEST_CASE("dataset round trip preserves annotations") {
    Rng rng(33);
    std::vector<Sample> samples;
    for (int i = 0; i < 4; ++i) {
        auto sp = random_synth_spec(rng, 4, 4, 2, 2, 48, 64);
        samples.push_back(render_synthetic(sp, rng, "s" + std::to_string(i)));
    }
    auto dir = temp_dir("ds");
    write_dataset(dir.string(), samples);
    auto back = load_dataset((dir / "data.jsonl").string());
    REQUIRE(back.size() == samples.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == samples[i].id);
        CHECK(back[i].grid.R == samples[i].grid.R);
        CHECK(back[i].grid.C == samples[i].grid.C);
        CHECK(back[i].grid.H_hdr == samples[i].grid.H_hdr);
        CHECK(back[i].grid.y == samples[i].grid.y);
        CHECK(back[i].grid.x == samples[i].grid.x);
        CHECK(back[i].spans.rs == samples[i].spans.rs);
        CHECK(back[i].spans.cs == samples[i].spans.cs);
        CHECK(back[i].spans.is_anchor == samples[i].spans.is_anchor);
        CHECK(back[i].text_boxes == samples[i].text_boxes);
        CHECK(back[i].image->shape == samples[i].image->shape);
    }
    fs::remove_all(dir);
}

TEST_CASE("dataset index uses the documented field names") {
    Rng rng(35);
    auto s = render_synthetic(uniform_spec(2, 2, 32, 32, 1), rng, "fields");
    auto dir = temp_dir("fields");
    write_dataset(dir.string(), {s});
    std::ifstream in(dir / "data.jsonl");
    std::string line;
    REQUIRE(std::getline(in, line));
    for (const char* key : {"\"id\"", "\"image\"", "\"R\"", "\"C\"", "\"header_rows\"",
                            "\"row_bounds\"", "\"col_bounds\"", "\"cells\"", "\"text_boxes\"",
                            "\"rs\"", "\"cs\""})
        CHECK(line.find(key) != std::string::npos);
    CHECK(line.find("images/fields.ppm") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("load_dataset rejects broken annotations") {
    auto dir = temp_dir("bad");
    {
        std::ofstream jl(dir / "data.jsonl");
        jl << "{not json}\n";
    }
    CHECK_THROWS_AS(load_dataset((dir / "data.jsonl").string()), data_error);
    {
        std::ofstream jl(dir / "data.jsonl");
        // cells do not tile the 2x2 grid
        jl << R"({"id":"x","image":"images/x.ppm","R":2,"C":2,"header_rows":0,)"
           << R"("row_bounds":[0,0.5,1],"col_bounds":[0,0.5,1],)"
           << R"("cells":[{"r":0,"c":0,"rs":1,"cs":1}],"text_boxes":[]})"
           << "\n";
    }
    CHECK_THROWS_AS(load_dataset((dir / "data.jsonl").string()), data_error);
    CHECK_THROWS_AS(load_dataset((dir / "missing.jsonl").string()), data_error);
    fs::remove_all(dir);
}
