#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fasttab/types.hpp"

namespace fasttab {

struct Cell {
    int r = 0, c = 0;
    int rowspan = 1, colspan = 1;
    bool header = false;

    bool operator==(const Cell&) const = default;
};

// Canonical logical table: one entry per anchor, tiling the R x C grid.
struct TableStructure {
    int R = 1, C = 1, H_hdr = 0;
    std::vector<Cell> cells;

    bool operator==(const TableStructure&) const = default;
    void validate() const;  // tiling + header-flag invariants
    bool is_complex() const;  // any merged cell
};

TableStructure build_structure(const GridSpec& g, const SpanGrid& s);

// Canonical serialization; the unit of golden-file comparisons.
std::string to_html(const TableStructure& t);

// Strict parser for the structure-only HTML subset; throws parse_error with
// a byte offset on malformed markup, occupancy overlap, or ragged grids.
TableStructure parse_html_structure(const std::string& html);

// Ordered label tree over {table, thead, tbody, tr, td} for tree-edit metrics.
struct HtmlNode {
    std::string label;
    int rowspan = 1, colspan = 1;  // td only
    std::vector<std::unique_ptr<HtmlNode>> children;
};

std::unique_ptr<HtmlNode> to_tree(const TableStructure& t);
int tree_size(const HtmlNode& n);

}  // namespace fasttab
