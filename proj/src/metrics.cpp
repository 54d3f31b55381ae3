#include "fasttab/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

namespace fasttab {

TopologyGrid topology_grid(const TableStructure& t) {
    t.validate();
    TopologyGrid g;
    g.R = t.R;
    g.C = t.C;
    g.boxes.resize(static_cast<size_t>(t.R) * t.C);
    for (const Cell& cl : t.cells) {
        GridBox box{cl.r, cl.c, cl.r + cl.rowspan - 1, cl.c + cl.colspan - 1};
        for (int r = cl.r; r <= box.r1; ++r)
            for (int c = cl.c; c <= box.c1; ++c) g.boxes[static_cast<size_t>(r) * t.C + c] = box;
    }
    return g;
}

double grid_box_iou(const GridBox& a, const GridBox& b) {
    const int ir0 = std::max(a.r0, b.r0), ir1 = std::min(a.r1, b.r1);
    const int ic0 = std::max(a.c0, b.c0), ic1 = std::min(a.c1, b.c1);
    const int inter = std::max(0, ir1 - ir0 + 1) * std::max(0, ic1 - ic0 + 1);
    const int area_a = (a.r1 - a.r0 + 1) * (a.c1 - a.c0 + 1);
    const int area_b = (b.r1 - b.r0 + 1) * (b.c1 - b.c0 + 1);
    const int uni = area_a + area_b - inter;
    return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

// ---------------------------------------------------------------------------
// Zhang-Shasha ordered tree edit distance, unit costs. Node equality is
// label plus span attributes.

namespace {

struct FlatTree {
    std::vector<std::string> key;  // postorder, 0-based
    std::vector<int> lml;          // leftmost leaf index per node
    std::vector<int> keyroots;
};

std::string node_key(const HtmlNode& n) {
    if (n.label == "td")
        return "td/" + std::to_string(n.rowspan) + "/" + std::to_string(n.colspan);
    return n.label;
}

int flatten(const HtmlNode& n, FlatTree& t) {
    int first_leaf = -1;
    for (const auto& c : n.children) {
        const int child_lml = flatten(*c, t);
        if (first_leaf == -1) first_leaf = child_lml;
    }
    const int idx = static_cast<int>(t.key.size());
    if (first_leaf == -1) first_leaf = idx;
    t.key.push_back(node_key(n));
    t.lml.push_back(first_leaf);
    return first_leaf;
}

FlatTree flat(const HtmlNode& root) {
    FlatTree t;
    flatten(root, t);
    const int n = static_cast<int>(t.key.size());
    std::vector<bool> seen(n, false);
    for (int i = n - 1; i >= 0; --i) {
        if (!seen[t.lml[i]]) {
            t.keyroots.push_back(i);
            seen[t.lml[i]] = true;
        }
    }
    std::sort(t.keyroots.begin(), t.keyroots.end());
    return t;
}

}  // namespace

int tree_edit_distance(const HtmlNode& a, const HtmlNode& b) {
    const FlatTree t1 = flat(a), t2 = flat(b);
    const int n1 = static_cast<int>(t1.key.size());
    const int n2 = static_cast<int>(t2.key.size());
    std::vector<std::vector<int>> td(n1, std::vector<int>(n2, 0));
    std::vector<std::vector<int>> fd(n1 + 1, std::vector<int>(n2 + 1, 0));

    for (int kr1 : t1.keyroots) {
        for (int kr2 : t2.keyroots) {
            const int l1 = t1.lml[kr1], l2 = t2.lml[kr2];
            fd[l1][l2] = 0;  // index shift: fd[i][j] is forest (l1..i-1, l2..j-1)
            for (int i = l1 + 1; i <= kr1 + 1; ++i) fd[i][l2] = fd[i - 1][l2] + 1;
            for (int j = l2 + 1; j <= kr2 + 1; ++j) fd[l1][j] = fd[l1][j - 1] + 1;
            for (int i = l1 + 1; i <= kr1 + 1; ++i) {
                for (int j = l2 + 1; j <= kr2 + 1; ++j) {
                    const int ni = i - 1, nj = j - 1;  // node indices
                    if (t1.lml[ni] == l1 && t2.lml[nj] == l2) {
                        const int rename = t1.key[ni] == t2.key[nj] ? 0 : 1;
                        fd[i][j] = std::min({fd[i - 1][j] + 1, fd[i][j - 1] + 1,
                                             fd[i - 1][j - 1] + rename});
                        td[ni][nj] = fd[i][j];
                    } else {
                        fd[i][j] = std::min({fd[i - 1][j] + 1, fd[i][j - 1] + 1,
                                             fd[t1.lml[ni]][t2.lml[nj]] + td[ni][nj]});
                    }
                }
            }
        }
    }
    return td[n1 - 1][n2 - 1];
}

// Independent reference: plain memoized recursion over ordered forests,
// removing the rightmost root each step.
namespace {

using Forest = std::vector<const HtmlNode*>;

int forest_size(const Forest& f) {
    int total = 0;
    for (const auto* n : f) total += tree_size(*n);
    return total;
}

std::string forest_sig(const Forest& f) {
    std::string s;
    for (const auto* n : f) {
        s += std::to_string(reinterpret_cast<uintptr_t>(n));
        s += ',';
    }
    return s;
}

int ted_forest(const Forest& f1, const Forest& f2, std::map<std::string, int>& memo) {
    if (f1.empty()) return forest_size(f2);
    if (f2.empty()) return forest_size(f1);
    const std::string key = forest_sig(f1) + "|" + forest_sig(f2);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;

    const HtmlNode* v = f1.back();
    const HtmlNode* w = f2.back();

    auto without_root = [](const Forest& f) {
        Forest rest(f.begin(), f.end() - 1);
        for (const auto& c : f.back()->children) rest.push_back(c.get());
        return rest;
    };
    auto rest1 = Forest(f1.begin(), f1.end() - 1);
    auto rest2 = Forest(f2.begin(), f2.end() - 1);
    Forest c1, c2;
    for (const auto& c : v->children) c1.push_back(c.get());
    for (const auto& c : w->children) c2.push_back(c.get());

    const int del = ted_forest(without_root(f1), f2, memo) + 1;
    const int ins = ted_forest(f1, without_root(f2), memo) + 1;
    const int rename = ted_forest(rest1, rest2, memo) + ted_forest(c1, c2, memo) +
                       (node_key(*v) == node_key(*w) ? 0 : 1);
    const int best = std::min({del, ins, rename});
    memo[key] = best;
    return best;
}

}  // namespace

int tree_edit_distance_reference(const HtmlNode& a, const HtmlNode& b) {
    std::map<std::string, int> memo;
    return ted_forest({&a}, {&b}, memo);
}

double s_teds(const HtmlNode& pred, const HtmlNode& gt) {
    const int ted = tree_edit_distance(pred, gt);
    const int denom = std::max(tree_size(pred), tree_size(gt));
    return denom > 0 ? 1.0 - static_cast<double>(ted) / denom : 1.0;
}

double s_teds(const TableStructure& pred, const TableStructure& gt) {
    return s_teds(*to_tree(pred), *to_tree(gt));
}

// ---------------------------------------------------------------------------
// GriTS_Top

namespace {

using Alignment = std::vector<std::pair<int, int>>;

// Max-sum order-preserving alignment; scores are non-negative.
Alignment best_alignment(const std::vector<std::vector<double>>& score) {
    const int n = static_cast<int>(score.size());
    const int m = n ? static_cast<int>(score[0].size()) : 0;
    std::vector<std::vector<double>> d(n + 1, std::vector<double>(m + 1, 0.0));
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= m; ++j)
            d[i][j] = std::max({d[i - 1][j], d[i][j - 1], d[i - 1][j - 1] + score[i - 1][j - 1]});
    Alignment a;
    int i = n, j = m;
    while (i > 0 && j > 0) {
        if (d[i][j] == d[i - 1][j - 1] + score[i - 1][j - 1]) {
            a.emplace_back(i - 1, j - 1);
            --i;
            --j;
        } else if (d[i][j] == d[i - 1][j]) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(a.begin(), a.end());
    return a;
}

double aligned_sum(const TopologyGrid& p, const TopologyGrid& g, const Alignment& rows,
                   const Alignment& cols) {
    double s = 0.0;
    for (const auto& [ri, rj] : rows)
        for (const auto& [ci, cj] : cols) s += grid_box_iou(p.at(ri, ci), g.at(rj, cj));
    return s;
}

double factored_from_col_init(const TopologyGrid& p, const TopologyGrid& g, Alignment cols) {
    Alignment rows;
    double best = 0.0;
    for (int iter = 0; iter < 20; ++iter) {
        std::vector<std::vector<double>> rscore(p.R, std::vector<double>(g.R, 0.0));
        for (int i = 0; i < p.R; ++i)
            for (int j = 0; j < g.R; ++j)
                for (const auto& [ci, cj] : cols)
                    rscore[i][j] += grid_box_iou(p.at(i, ci), g.at(j, cj));
        rows = best_alignment(rscore);

        std::vector<std::vector<double>> cscore(p.C, std::vector<double>(g.C, 0.0));
        for (int ci = 0; ci < p.C; ++ci)
            for (int cj = 0; cj < g.C; ++cj)
                for (const auto& [ri, rj] : rows)
                    cscore[ci][cj] += grid_box_iou(p.at(ri, ci), g.at(rj, cj));
        cols = best_alignment(cscore);

        const double s = aligned_sum(p, g, rows, cols);
        if (s <= best + 1e-12) {
            best = std::max(best, s);
            break;
        }
        best = s;
    }
    return best;
}

}  // namespace

double grits_top_factored(const TopologyGrid& p, const TopologyGrid& g) {
    double best_m = 0.0;

    // init 1: identity column prefix
    Alignment ident_cols;
    for (int c = 0; c < std::min(p.C, g.C); ++c) ident_cols.emplace_back(c, c);
    best_m = std::max(best_m, factored_from_col_init(p, g, ident_cols));

    // init 2: columns aligned by a nested per-column cell DP
    {
        std::vector<std::vector<double>> cscore(p.C, std::vector<double>(g.C, 0.0));
        for (int ci = 0; ci < p.C; ++ci)
            for (int cj = 0; cj < g.C; ++cj) {
                std::vector<std::vector<double>> cell(p.R, std::vector<double>(g.R, 0.0));
                for (int i = 0; i < p.R; ++i)
                    for (int j = 0; j < g.R; ++j) cell[i][j] = grid_box_iou(p.at(i, ci), g.at(j, cj));
                const auto a = best_alignment(cell);
                for (const auto& [i, j] : a) cscore[ci][cj] += cell[i][j];
            }
        best_m = std::max(best_m, factored_from_col_init(p, g, best_alignment(cscore)));
    }

    const double denom = static_cast<double>(p.R) * p.C + static_cast<double>(g.R) * g.C;
    return denom > 0 ? 2.0 * best_m / denom : 1.0;
}

double grits_top_brute(const TopologyGrid& p, const TopologyGrid& g) {
    auto subsequences = [](int n) {
        std::vector<std::vector<int>> out;
        for (int mask = 0; mask < (1 << n); ++mask) {
            std::vector<int> s;
            for (int i = 0; i < n; ++i)
                if (mask & (1 << i)) s.push_back(i);
            out.push_back(std::move(s));
        }
        return out;
    };
    const auto pr = subsequences(p.R), gr = subsequences(g.R);
    const auto pc = subsequences(p.C), gc = subsequences(g.C);

    double best = 0.0;
    for (const auto& rs1 : pr)
        for (const auto& rs2 : gr) {
            if (rs1.size() != rs2.size() || rs1.empty()) continue;
            for (const auto& cs1 : pc)
                for (const auto& cs2 : gc) {
                    if (cs1.size() != cs2.size() || cs1.empty()) continue;
                    double s = 0.0;
                    for (size_t a = 0; a < rs1.size(); ++a)
                        for (size_t b = 0; b < cs1.size(); ++b)
                            s += grid_box_iou(p.at(rs1[a], cs1[b]), g.at(rs2[a], cs2[b]));
                    best = std::max(best, s);
                }
        }
    const double denom = static_cast<double>(p.R) * p.C + static_cast<double>(g.R) * g.C;
    return denom > 0 ? 2.0 * best / denom : 1.0;
}

double grits_top(const TopologyGrid& pred, const TopologyGrid& gt) {
    if (pred.R <= 4 && pred.C <= 4 && gt.R <= 4 && gt.C <= 4)
        return grits_top_brute(pred, gt);
    return grits_top_factored(pred, gt);
}

double grits_top(const TableStructure& pred, const TableStructure& gt) {
    return grits_top(topology_grid(pred), topology_grid(gt));
}

// ---------------------------------------------------------------------------
// CAR F1

std::vector<AdjRelation> adjacency_relations(const TableStructure& t) {
    const TopologyGrid g = topology_grid(t);
    std::set<AdjRelation> rels;
    for (int r = 0; r < g.R; ++r)
        for (int c = 0; c + 1 < g.C; ++c) {
            const GridBox& a = g.at(r, c);
            const GridBox& b = g.at(r, c + 1);
            if (!(a == b)) rels.insert({a, b, true});
        }
    for (int r = 0; r + 1 < g.R; ++r)
        for (int c = 0; c < g.C; ++c) {
            const GridBox& a = g.at(r, c);
            const GridBox& b = g.at(r + 1, c);
            if (!(a == b)) rels.insert({a, b, false});
        }
    return {rels.begin(), rels.end()};
}

std::vector<AdjRelation> adjacency_relations_exhaustive(const TableStructure& t) {
    t.validate();
    std::vector<GridBox> boxes;
    for (const Cell& cl : t.cells)
        boxes.push_back({cl.r, cl.c, cl.r + cl.rowspan - 1, cl.c + cl.colspan - 1});
    std::set<AdjRelation> rels;
    for (const GridBox& a : boxes)
        for (const GridBox& b : boxes) {
            if (a == b) continue;
            const bool rows_overlap = std::max(a.r0, b.r0) <= std::min(a.r1, b.r1);
            const bool cols_overlap = std::max(a.c0, b.c0) <= std::min(a.c1, b.c1);
            if (a.c1 + 1 == b.c0 && rows_overlap) rels.insert({a, b, true});
            if (a.r1 + 1 == b.r0 && cols_overlap) rels.insert({a, b, false});
        }
    return {rels.begin(), rels.end()};
}

namespace {

CarScores score_relations(const std::vector<AdjRelation>& pred,
                          const std::vector<AdjRelation>& gt) {
    const std::set<AdjRelation> gt_set(gt.begin(), gt.end());
    int tp = 0;
    for (const auto& r : pred)
        if (gt_set.count(r)) ++tp;
    CarScores s;
    if (pred.empty() && gt.empty()) {
        s.precision = s.recall = s.f1 = 1.0;
        return s;
    }
    s.precision = pred.empty() ? 0.0 : static_cast<double>(tp) / pred.size();
    s.recall = gt.empty() ? 0.0 : static_cast<double>(tp) / gt.size();
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

}  // namespace

CarScores car_f1(const TableStructure& pred, const TableStructure& gt) {
    return score_relations(adjacency_relations(pred), adjacency_relations(gt));
}

CarScores car_f1_oracle(const TableStructure& pred, const TableStructure& gt) {
    return score_relations(adjacency_relations_exhaustive(pred),
                           adjacency_relations_exhaustive(gt));
}

}  // namespace fasttab
