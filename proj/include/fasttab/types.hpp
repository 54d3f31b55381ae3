#pragma once

#include <cstdint>
#include <vector>

#include "fasttab/common.hpp"
#include "fasttab/tensor.hpp"

namespace fasttab {

// Normalized straight grid: boundary vectors over [0,1] per axis.
struct GridSpec {
    int R = 1, C = 1;
    int H_hdr = 0;
    std::vector<double> y;  // R+1 entries, y[0]=0, y[R]=1, non-decreasing
    std::vector<double> x;  // C+1 entries

    void validate() const {
        auto check_axis = [](const std::vector<double>& v, int n, const char* name) {
            if (static_cast<int>(v.size()) != n + 1)
                throw dimension_error(std::string("GridSpec: ") + name + " has " +
                                      std::to_string(v.size()) + " entries, expected " +
                                      std::to_string(n + 1));
            if (v.front() != 0.0 || v.back() != 1.0)
                throw config_error(std::string("GridSpec: ") + name + " endpoints must be 0 and 1");
            for (size_t i = 1; i < v.size(); ++i)
                if (v[i] < v[i - 1])
                    throw config_error(std::string("GridSpec: ") + name + " not non-decreasing");
        };
        if (R < 1 || C < 1) throw config_error("GridSpec: R and C must be positive");
        if (H_hdr < 0 || H_hdr > R) throw config_error("GridSpec: header rows out of [0,R]");
        check_axis(y, R, "y");
        check_axis(x, C, "x");
    }

    static GridSpec uniform(int r, int c, int h_hdr = 0) {
        GridSpec g;
        g.R = r;
        g.C = c;
        g.H_hdr = h_hdr;
        g.y.resize(r + 1);
        g.x.resize(c + 1);
        for (int i = 0; i <= r; ++i) g.y[i] = static_cast<double>(i) / r;
        for (int j = 0; j <= c; ++j) g.x[j] = static_cast<double>(j) / c;
        return g;
    }
};

// Per-slot rowspan/colspan with anchor/covered classification; anchored
// regions tile the grid exactly.
struct SpanGrid {
    int R = 0, C = 0;
    std::vector<int> rs, cs;         // R*C, defined at anchors
    std::vector<uint8_t> is_anchor;  // R*C

    int idx(int r, int c) const { return r * C + c; }

    bool tiles() const {
        std::vector<int> owner(static_cast<size_t>(R) * C, -1);
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c) {
                if (!is_anchor[idx(r, c)]) continue;
                for (int dr = 0; dr < rs[idx(r, c)]; ++dr)
                    for (int dc = 0; dc < cs[idx(r, c)]; ++dc) {
                        const int rr = r + dr, cc = c + dc;
                        if (rr >= R || cc >= C) return false;
                        if (owner[idx(rr, cc)] != -1) return false;
                        owner[idx(rr, cc)] = idx(r, c);
                    }
            }
        for (int v : owner)
            if (v == -1) return false;
        return true;
    }
};

struct CellRect {
    int r = 0, c = 0;
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
};

struct FeatureMap {
    TensorPtr t;  // [d_model, H_f, W_f]
    int64_t src_h = 0, src_w = 0;
};

// Polyline boundaries over a straight base grid.
struct CurvedGrid {
    GridSpec base;
    int K = 128;
    std::vector<double> row_poly;  // (R+1) x K
    std::vector<double> col_poly;  // (C+1) x K
};

}  // namespace fasttab
