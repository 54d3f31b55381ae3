#include "fasttab/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace fasttab {

using nlohmann::json;
namespace fs = std::filesystem;

AnonymMethod anonym_from_string(const std::string& s) {
    if (s == "black") return AnonymMethod::Black;
    if (s == "median") return AnonymMethod::Median;
    if (s == "gaussian") return AnonymMethod::GaussianBlur;
    if (s == "pixelation") return AnonymMethod::Pixelation;
    if (s == "mean") return AnonymMethod::Mean;
    if (s == "noise") return AnonymMethod::Noise;
    throw usage_error("unknown anonymisation method '" + s +
                      "' (expected black|median|gaussian|pixelation|mean|noise)");
}

std::string anonym_to_string(AnonymMethod m) {
    switch (m) {
        case AnonymMethod::Black: return "black";
        case AnonymMethod::Median: return "median";
        case AnonymMethod::GaussianBlur: return "gaussian";
        case AnonymMethod::Pixelation: return "pixelation";
        case AnonymMethod::Mean: return "mean";
        case AnonymMethod::Noise: return "noise";
    }
    return "black";
}

// ---------------------------------------------------------------------------
// Synthetic layout + render

SynthSpec random_synth_spec(Rng& rng, int r_cap, int c_cap, int rs_cap, int cs_cap,
                            int height, int width) {
    SynthSpec sp;
    sp.height = height;
    sp.width = width;

    const int r = 1 + static_cast<int>(rng.randint(static_cast<uint64_t>(r_cap)));
    const int c = 1 + static_cast<int>(rng.randint(static_cast<uint64_t>(c_cap)));

    auto jittered_bounds = [&](int n) {
        std::vector<double> widths(n);
        double total = 0;
        for (double& w : widths) {
            w = rng.uniform(0.6, 1.4);
            total += w;
        }
        std::vector<double> b(n + 1, 0.0);
        double acc = 0;
        for (int i = 0; i < n; ++i) {
            acc += widths[i];
            b[i + 1] = acc / total;
        }
        b[n] = 1.0;
        return b;
    };

    sp.grid.R = r;
    sp.grid.C = c;
    sp.grid.y = jittered_bounds(r);
    sp.grid.x = jittered_bounds(c);
    sp.grid.H_hdr = static_cast<int>(rng.randint(static_cast<uint64_t>(std::min(r, 2) + 1)));

    SpanGrid& sg = sp.spans;
    sg.R = r;
    sg.C = c;
    sg.rs.assign(static_cast<size_t>(r) * c, 0);
    sg.cs.assign(static_cast<size_t>(r) * c, 0);
    sg.is_anchor.assign(static_cast<size_t>(r) * c, 0);
    std::vector<uint8_t> taken(static_cast<size_t>(r) * c, 0);
    for (int rr = 0; rr < r; ++rr)
        for (int cc = 0; cc < c; ++cc) {
            if (taken[sg.idx(rr, cc)]) continue;
            int want_rs = 1, want_cs = 1;
            if (rng.uniform() < 0.25) {
                want_rs = 1 + static_cast<int>(rng.randint(
                                  static_cast<uint64_t>(std::min(rs_cap, r - rr))));
                want_cs = 1 + static_cast<int>(rng.randint(
                                  static_cast<uint64_t>(std::min(cs_cap, c - cc))));
            }
            // shrink until the whole region is free
            while (want_cs > 1 || want_rs > 1) {
                bool free = true;
                for (int dr = 0; dr < want_rs && free; ++dr)
                    for (int dc = 0; dc < want_cs && free; ++dc)
                        if (taken[sg.idx(rr + dr, cc + dc)]) free = false;
                if (free) break;
                if (want_cs > 1)
                    --want_cs;
                else
                    --want_rs;
            }
            sg.is_anchor[sg.idx(rr, cc)] = 1;
            sg.rs[sg.idx(rr, cc)] = want_rs;
            sg.cs[sg.idx(rr, cc)] = want_cs;
            for (int dr = 0; dr < want_rs; ++dr)
                for (int dc = 0; dc < want_cs; ++dc) taken[sg.idx(rr + dr, cc + dc)] = 1;
        }
    return sp;
}

namespace {

void fill_rect(Tensor& img, int x0, int y0, int x1, int y1, double v) {
    const int h = static_cast<int>(img.shape[1]), w = static_cast<int>(img.shape[2]);
    x0 = std::max(0, x0);
    y0 = std::max(0, y0);
    x1 = std::min(w, x1);
    y1 = std::min(h, y1);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) img.data[(static_cast<size_t>(ch) * h + y) * w + x] = v;
}

}  // namespace

Sample render_synthetic(const SynthSpec& spec, Rng& rng, const std::string& id) {
    spec.grid.validate();
    if (!spec.spans.tiles())
        throw data_error("render_synthetic: span layout does not tile sample " + id);
    const int h = spec.height, w = spec.width;
    if (h < 16 || w < 8) throw data_error("render_synthetic: canvas too small for sample " + id);

    Sample s;
    s.id = id;
    s.grid = spec.grid;
    s.spans = spec.spans;
    s.image = Tensor::full({3, h, w}, 1.0);

    auto py = [&](double v) { return static_cast<int>(std::lround(v * (h - 1))); };
    auto px = [&](double v) { return static_cast<int>(std::lround(v * (w - 1))); };

    if (spec.grid.H_hdr > 0)
        fill_rect(*s.image, 0, 0, w, py(spec.grid.y[spec.grid.H_hdr]) + 1, 0.92);

    if (spec.ruled) {
        for (int i = 0; i <= spec.grid.R; ++i) fill_rect(*s.image, 0, py(spec.grid.y[i]),
                                                         w, py(spec.grid.y[i]) + 1, 0.2);
        for (int j = 0; j <= spec.grid.C; ++j) fill_rect(*s.image, px(spec.grid.x[j]), 0,
                                                         px(spec.grid.x[j]) + 1, h, 0.2);
    }

    // 1-3 word blocks per logical cell, kept clear of the separators
    for (int r = 0; r < spec.grid.R; ++r)
        for (int c = 0; c < spec.grid.C; ++c) {
            if (!spec.spans.is_anchor[spec.spans.idx(r, c)]) continue;
            const int rs = spec.spans.rs[spec.spans.idx(r, c)];
            const int cs = spec.spans.cs[spec.spans.idx(r, c)];
            const int cx0 = px(spec.grid.x[c]) + 2, cx1 = px(spec.grid.x[c + cs]) - 1;
            const int cy0 = py(spec.grid.y[r]) + 2, cy1 = py(spec.grid.y[r + rs]) - 1;
            if (cx1 - cx0 < 2 || cy1 - cy0 < 2) continue;
            const int n_words = 1 + static_cast<int>(rng.randint(3));
            for (int k = 0; k < n_words; ++k) {
                const int max_w = std::min(cx1 - cx0, 12);
                const int max_h = std::min(cy1 - cy0, 4);
                const int ww = 2 + static_cast<int>(rng.randint(std::max(1, max_w - 1)));
                const int wh = 2 + static_cast<int>(rng.randint(std::max(1, max_h - 1)));
                const int wx = cx0 + static_cast<int>(rng.randint(std::max(1, cx1 - cx0 - ww + 1)));
                const int wy = cy0 + static_cast<int>(rng.randint(std::max(1, cy1 - cy0 - wh + 1)));
                fill_rect(*s.image, wx, wy, wx + ww, wy + wh, 0.1);
                s.text_boxes.push_back({wx, wy, wx + ww, wy + wh});
            }
        }
    return s;
}

// ---------------------------------------------------------------------------
// Anonymisation

namespace {

struct BoxView {
    Tensor& img;
    int x0, y0, x1, y1, h, w;
    double& at(int ch, int y, int x) {
        return img.data[(static_cast<size_t>(ch) * img.shape[1] + y) * img.shape[2] + x];
    }
};

void apply_black(BoxView& b) {
    for (int ch = 0; ch < 3; ++ch)
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) b.at(ch, y, x) = 0.0;
}

void apply_mean(BoxView& b) {
    for (int ch = 0; ch < 3; ++ch) {
        double sum = 0;
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) sum += b.at(ch, y, x);
        const double m = sum / (static_cast<double>(b.y1 - b.y0) * (b.x1 - b.x0));
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) b.at(ch, y, x) = m;
    }
}

void apply_median(BoxView& b) {
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> vals;
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) vals.push_back(b.at(ch, y, x));
        const size_t mid = vals.size() / 2;
        std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
        double med = vals[mid];
        if (vals.size() % 2 == 0) {
            std::nth_element(vals.begin(), vals.begin() + mid - 1, vals.end());
            med = 0.5 * (med + vals[mid - 1]);
        }
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) b.at(ch, y, x) = med;
    }
}

void apply_gaussian(BoxView& b) {
    const int bh = b.y1 - b.y0, bw = b.x1 - b.x0;
    const double sigma = bh / 4.0;
    if (sigma <= 0) return;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kern(2 * radius + 1);
    double ksum = 0;
    for (int i = -radius; i <= radius; ++i) {
        kern[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        ksum += kern[i + radius];
    }
    for (double& k : kern) k /= ksum;

    std::vector<double> src(static_cast<size_t>(bh) * bw), tmp(src.size());
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < bh; ++y)
            for (int x = 0; x < bw; ++x) src[static_cast<size_t>(y) * bw + x] = b.at(ch, b.y0 + y, b.x0 + x);
        // horizontal then vertical, clamped at the box edges
        for (int y = 0; y < bh; ++y)
            for (int x = 0; x < bw; ++x) {
                double acc = 0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kern[i + radius] * src[static_cast<size_t>(y) * bw + std::clamp(x + i, 0, bw - 1)];
                tmp[static_cast<size_t>(y) * bw + x] = acc;
            }
        for (int y = 0; y < bh; ++y)
            for (int x = 0; x < bw; ++x) {
                double acc = 0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kern[i + radius] * tmp[static_cast<size_t>(std::clamp(y + i, 0, bh - 1)) * bw + x];
                b.at(ch, b.y0 + y, b.x0 + x) = acc;
            }
    }
}

void apply_pixelation(BoxView& b) {
    constexpr int kBlock = 8;
    for (int ch = 0; ch < 3; ++ch)
        for (int by = b.y0; by < b.y1; by += kBlock)
            for (int bx = b.x0; bx < b.x1; bx += kBlock) {
                const int ey = std::min(by + kBlock, b.y1), ex = std::min(bx + kBlock, b.x1);
                double sum = 0;
                for (int y = by; y < ey; ++y)
                    for (int x = bx; x < ex; ++x) sum += b.at(ch, y, x);
                const double m = sum / (static_cast<double>(ey - by) * (ex - bx));
                for (int y = by; y < ey; ++y)
                    for (int x = bx; x < ex; ++x) b.at(ch, y, x) = m;
            }
}

void apply_noise(BoxView& b, Rng& rng) {
    for (int ch = 0; ch < 3; ++ch)
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x)
                b.at(ch, y, x) = std::clamp(b.at(ch, y, x) + rng.normal(0.0, 0.2), 0.0, 1.0);
}

}  // namespace

TensorPtr anonymise(const TensorPtr& img, const std::vector<std::array<int, 4>>& boxes,
                    AnonymMethod method, Rng& rng) {
    if (img->shape.size() != 3 || img->shape[0] != 3)
        throw dimension_error("anonymise: need image [3,H,W]");
    const int h = static_cast<int>(img->shape[1]), w = static_cast<int>(img->shape[2]);
    auto out = Tensor::create(img->shape, img->data);
    for (const auto& box : boxes) {
        if (box[0] < 0 || box[1] < 0 || box[2] > w || box[3] > h || box[0] >= box[2] ||
            box[1] >= box[3])
            throw data_error("anonymise: text box outside image or empty");
        BoxView b{*out, box[0], box[1], box[2], box[3], h, w};
        switch (method) {
            case AnonymMethod::Black: apply_black(b); break;
            case AnonymMethod::Mean: apply_mean(b); break;
            case AnonymMethod::Median: apply_median(b); break;
            case AnonymMethod::GaussianBlur: apply_gaussian(b); break;
            case AnonymMethod::Pixelation: apply_pixelation(b); break;
            case AnonymMethod::Noise: apply_noise(b, rng); break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rotation corruption

Sample rotate_sample(const Sample& s, double alpha_deg, Rng& rng, int k_points) {
    if (alpha_deg < 0) throw usage_error("rotate_sample: alpha must be >= 0");
    const double theta_deg = alpha_deg > 0 ? rng.uniform(-alpha_deg, alpha_deg) : 0.0;
    return rotate_sample_theta(s, theta_deg, k_points);
}

Sample rotate_sample_theta(const Sample& s, double theta_deg, int k_points) {
    if (k_points < 2) throw usage_error("rotate_sample: need at least 2 polyline points");
    const double theta = theta_deg * M_PI / 180.0;
    const int h = static_cast<int>(s.image->shape[1]), w = static_cast<int>(s.image->shape[2]);

    Sample out = s;
    out.has_curved = true;
    out.curved.base = s.grid;
    out.curved.K = k_points;
    out.curved.row_poly.assign(static_cast<size_t>(s.grid.R + 1) * k_points, 0.0);
    out.curved.col_poly.assign(static_cast<size_t>(s.grid.C + 1) * k_points, 0.0);

    if (theta == 0.0) {  // exact identity, polylines degenerate to the base boundaries
        for (int i = 0; i <= s.grid.R; ++i)
            for (int k = 0; k < k_points; ++k)
                out.curved.row_poly[static_cast<size_t>(i) * k_points + k] = s.grid.y[i];
        for (int j = 0; j <= s.grid.C; ++j)
            for (int k = 0; k < k_points; ++k)
                out.curved.col_poly[static_cast<size_t>(j) * k_points + k] = s.grid.x[j];
        return out;
    }

    const double cx = 0.5 * w, cy = 0.5 * h;
    const double ct = std::cos(theta), st = std::sin(theta);
    auto fwd = [&](double x, double y) {
        return std::pair<double, double>{cx + ct * (x - cx) - st * (y - cy),
                                         cy + st * (x - cx) + ct * (y - cy)};
    };

    // bounding box of the rotated table frame
    double minx = 1e30, maxx = -1e30, miny = 1e30, maxy = -1e30;
    for (const auto& [px0, py0] : {std::pair{0.0, 0.0}, {double(w), 0.0}, {0.0, double(h)},
                                   {double(w), double(h)}}) {
        auto [px1, py1] = fwd(px0, py0);
        minx = std::min(minx, px1);
        maxx = std::max(maxx, px1);
        miny = std::min(miny, py1);
        maxy = std::max(maxy, py1);
    }

    for (int i = 0; i <= s.grid.R; ++i)
        for (int k = 0; k < k_points; ++k) {
            const double u = static_cast<double>(k) / (k_points - 1);
            auto [rx, ry] = fwd(u * w, s.grid.y[i] * h);
            out.curved.row_poly[static_cast<size_t>(i) * k_points + k] = (ry - miny) / (maxy - miny);
        }
    for (int j = 0; j <= s.grid.C; ++j)
        for (int k = 0; k < k_points; ++k) {
            const double u = static_cast<double>(k) / (k_points - 1);
            auto [rx, ry] = fwd(s.grid.x[j] * w, u * h);
            out.curved.col_poly[static_cast<size_t>(j) * k_points + k] = (rx - minx) / (maxx - minx);
        }

    // inverse-map bilinear resampling onto a white canvas
    out.image = Tensor::full({3, h, w}, 1.0);
    auto sample = [&](int ch, double sx, double sy) {
        // pixel-center convention; white outside the source frame
        const double fx = sx - 0.5, fy = sy - 0.5;
        const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
        const double wx = fx - x0, wy = fy - y0;
        double acc = 0;
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const int xx = x0 + dx, yy = y0 + dy;
                const double v = (xx >= 0 && xx < w && yy >= 0 && yy < h)
                                     ? s.image->data[(static_cast<size_t>(ch) * h + yy) * w + xx]
                                     : 1.0;
                acc += v * (dx ? wx : 1 - wx) * (dy ? wy : 1 - wy);
            }
        return acc;
    };
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double ox = x + 0.5, oy = y + 0.5;
                const double sx = cx + ct * (ox - cx) + st * (oy - cy);
                const double sy = cy - st * (ox - cx) + ct * (oy - cy);
                out.image->data[(static_cast<size_t>(ch) * h + y) * w + x] = sample(ch, sx, sy);
            }

    // rotated text boxes: axis-aligned hull, clipped; degenerate ones dropped
    out.text_boxes.clear();
    for (const auto& box : s.text_boxes) {
        double bx0 = 1e30, bx1 = -1e30, by0 = 1e30, by1 = -1e30;
        for (const auto& [px0, py0] :
             {std::pair{double(box[0]), double(box[1])}, {double(box[2]), double(box[1])},
              {double(box[0]), double(box[3])}, {double(box[2]), double(box[3])}}) {
            auto [rx, ry] = fwd(px0, py0);
            bx0 = std::min(bx0, rx);
            bx1 = std::max(bx1, rx);
            by0 = std::min(by0, ry);
            by1 = std::max(by1, ry);
        }
        const int x0 = std::max(0, static_cast<int>(std::floor(bx0)));
        const int y0 = std::max(0, static_cast<int>(std::floor(by0)));
        const int x1 = std::min(w, static_cast<int>(std::ceil(bx1)));
        const int y1 = std::min(h, static_cast<int>(std::ceil(by1)));
        if (x1 > x0 && y1 > y0) out.text_boxes.push_back({x0, y0, x1, y1});
    }
    return out;
}

// ---------------------------------------------------------------------------
// PPM + JSONL I/O

void write_ppm(const std::string& path, const TensorPtr& img) {
    if (img->shape.size() != 3 || img->shape[0] != 3)
        throw dimension_error("write_ppm: need image [3,H,W]");
    const int h = static_cast<int>(img->shape[1]), w = static_cast<int>(img->shape[2]);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                const double v = img->data[(static_cast<size_t>(ch) * h + y) * w + x];
                row[static_cast<size_t>(x) * 3 + ch] =
                    static_cast<unsigned char>(std::clamp(std::lround(v * 255.0), 0L, 255L));
            }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!out) throw data_error("short write to " + path);
}

TensorPtr read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    auto next_token = [&]() {
        std::string tok;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                while (in.get(c) && c != '\n') {
                }
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!tok.empty()) break;
                continue;
            }
            tok += c;
        }
        if (tok.empty()) throw data_error("truncated PPM header in " + path);
        return tok;
    };
    if (next_token() != "P6") throw data_error(path + " is not a binary PPM (P6)");
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (w <= 0 || h <= 0 || maxval != 255) throw data_error("unsupported PPM parameters in " + path);
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw data_error("truncated pixel data in " + path);
    auto img = Tensor::zeros({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img->data[(static_cast<size_t>(ch) * h + y) * w + x] =
                    raw[(static_cast<size_t>(y) * w + x) * 3 + ch] / 255.0;
    return img;
}

void write_dataset(const std::string& dir, const std::vector<Sample>& samples) {
    fs::create_directories(fs::path(dir) / "images");
    std::ofstream jl(fs::path(dir) / "data.jsonl");
    if (!jl) throw data_error("cannot write dataset index in " + dir);
    for (const Sample& s : samples) {
        const std::string rel = "images/" + s.id + ".ppm";
        write_ppm((fs::path(dir) / rel).string(), s.image);
        json rec;
        rec["id"] = s.id;
        rec["image"] = rel;
        rec["R"] = s.grid.R;
        rec["C"] = s.grid.C;
        rec["header_rows"] = s.grid.H_hdr;
        rec["row_bounds"] = s.grid.y;
        rec["col_bounds"] = s.grid.x;
        json cells = json::array();
        for (int r = 0; r < s.spans.R; ++r)
            for (int c = 0; c < s.spans.C; ++c) {
                if (!s.spans.is_anchor[s.spans.idx(r, c)]) continue;
                cells.push_back({{"r", r},
                                 {"c", c},
                                 {"rs", s.spans.rs[s.spans.idx(r, c)]},
                                 {"cs", s.spans.cs[s.spans.idx(r, c)]}});
            }
        rec["cells"] = cells;
        json boxes = json::array();
        for (const auto& b : s.text_boxes) boxes.push_back({b[0], b[1], b[2], b[3]});
        rec["text_boxes"] = boxes;
        jl << rec.dump() << "\n";
    }
}

std::vector<Sample> load_dataset(const std::string& jsonl_path) {
    std::ifstream in(jsonl_path);
    if (!in) throw data_error("cannot open dataset " + jsonl_path);
    const fs::path base = fs::path(jsonl_path).parent_path();
    std::vector<Sample> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const std::exception& e) {
            throw data_error(jsonl_path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
        }
        try {
            Sample s;
            s.id = rec.at("id").get<std::string>();
            s.grid.R = rec.at("R").get<int>();
            s.grid.C = rec.at("C").get<int>();
            s.grid.H_hdr = rec.at("header_rows").get<int>();
            s.grid.y = rec.at("row_bounds").get<std::vector<double>>();
            s.grid.x = rec.at("col_bounds").get<std::vector<double>>();
            s.grid.validate();
            s.spans.R = s.grid.R;
            s.spans.C = s.grid.C;
            const size_t n = static_cast<size_t>(s.grid.R) * s.grid.C;
            s.spans.rs.assign(n, 0);
            s.spans.cs.assign(n, 0);
            s.spans.is_anchor.assign(n, 0);
            for (const auto& cj : rec.at("cells")) {
                const int r = cj.at("r").get<int>(), c = cj.at("c").get<int>();
                if (r < 0 || r >= s.grid.R || c < 0 || c >= s.grid.C)
                    throw data_error("cell anchor out of grid");
                s.spans.is_anchor[s.spans.idx(r, c)] = 1;
                s.spans.rs[s.spans.idx(r, c)] = cj.at("rs").get<int>();
                s.spans.cs[s.spans.idx(r, c)] = cj.at("cs").get<int>();
            }
            if (!s.spans.tiles()) throw data_error("cells do not tile the grid");
            for (const auto& bj : rec.at("text_boxes"))
                s.text_boxes.push_back({bj.at(0).get<int>(), bj.at(1).get<int>(),
                                        bj.at(2).get<int>(), bj.at(3).get<int>()});
            s.image = read_ppm((base / rec.at("image").get<std::string>()).string());
            out.push_back(std::move(s));
        } catch (const data_error&) {
            throw;
        } catch (const std::exception& e) {
            throw data_error(jsonl_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace fasttab
