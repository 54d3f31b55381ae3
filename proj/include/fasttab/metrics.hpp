#pragma once

#include <vector>

#include "fasttab/structure.hpp"

namespace fasttab {

// Inclusive grid-index bounding box of a logical cell.
struct GridBox {
    int r0 = 0, c0 = 0, r1 = 0, c1 = 0;
    bool operator==(const GridBox&) const = default;
    auto operator<=>(const GridBox&) const = default;
};

// One box per grid slot; slots of the same logical cell carry the same box.
struct TopologyGrid {
    int R = 0, C = 0;
    std::vector<GridBox> boxes;  // R*C row-major
    const GridBox& at(int r, int c) const { return boxes[static_cast<size_t>(r) * C + c]; }
};

TopologyGrid topology_grid(const TableStructure& t);
double grid_box_iou(const GridBox& a, const GridBox& b);

// --- S-TEDS ---------------------------------------------------------------
int tree_edit_distance(const HtmlNode& a, const HtmlNode& b);            // Zhang-Shasha
int tree_edit_distance_reference(const HtmlNode& a, const HtmlNode& b);  // memoized forests
double s_teds(const HtmlNode& pred, const HtmlNode& gt);
double s_teds(const TableStructure& pred, const TableStructure& gt);

// --- GriTS_Top -------------------------------------------------------------
// Factored alternating row/column alignment DP; brute-force subsequence
// enumeration is used directly for grids up to 4x4.
double grits_top(const TopologyGrid& pred, const TopologyGrid& gt);
double grits_top_factored(const TopologyGrid& pred, const TopologyGrid& gt);
double grits_top_brute(const TopologyGrid& pred, const TopologyGrid& gt);
double grits_top(const TableStructure& pred, const TableStructure& gt);

// --- CAR F1 ----------------------------------------------------------------
struct AdjRelation {
    GridBox a, b;
    bool horizontal = true;  // side-by-side; false = stacked
    auto operator<=>(const AdjRelation&) const = default;
};

std::vector<AdjRelation> adjacency_relations(const TableStructure& t);  // owner-matrix scan
std::vector<AdjRelation> adjacency_relations_exhaustive(const TableStructure& t);  // pairwise

struct CarScores {
    double precision = 0, recall = 0, f1 = 0;
};
CarScores car_f1(const TableStructure& pred, const TableStructure& gt);
CarScores car_f1_oracle(const TableStructure& pred, const TableStructure& gt);

}  // namespace fasttab
