#include "fasttab/structure.hpp"

#include <algorithm>
#include <cctype>

namespace fasttab {

void TableStructure::validate() const {
    if (R < 1 || C < 1) throw config_error("TableStructure: R and C must be positive");
    if (H_hdr < 0 || H_hdr > R) throw config_error("TableStructure: H_hdr out of [0,R]");
    std::vector<int> owner(static_cast<size_t>(R) * C, -1);
    for (size_t i = 0; i < cells.size(); ++i) {
        const Cell& cl = cells[i];
        if (cl.r < 0 || cl.c < 0 || cl.rowspan < 1 || cl.colspan < 1 ||
            cl.r + cl.rowspan > R || cl.c + cl.colspan > C)
            throw config_error("TableStructure: cell exceeds grid bounds");
        if (cl.header != (cl.r < H_hdr))
            throw config_error("TableStructure: header flag inconsistent with H_hdr");
        for (int dr = 0; dr < cl.rowspan; ++dr)
            for (int dc = 0; dc < cl.colspan; ++dc) {
                int& o = owner[(cl.r + dr) * C + cl.c + dc];
                if (o != -1) throw config_error("TableStructure: overlapping cells");
                o = static_cast<int>(i);
            }
    }
    for (int o : owner)
        if (o == -1) throw config_error("TableStructure: grid not fully tiled");
}

bool TableStructure::is_complex() const {
    return std::any_of(cells.begin(), cells.end(),
                       [](const Cell& c) { return c.rowspan > 1 || c.colspan > 1; });
}

TableStructure build_structure(const GridSpec& g, const SpanGrid& s) {
    if (g.R != s.R || g.C != s.C)
        throw config_error("build_structure: GridSpec " + std::to_string(g.R) + "x" +
                           std::to_string(g.C) + " vs SpanGrid " + std::to_string(s.R) + "x" +
                           std::to_string(s.C));
    TableStructure t;
    t.R = g.R;
    t.C = g.C;
    t.H_hdr = g.H_hdr;
    for (int r = 0; r < s.R; ++r)
        for (int c = 0; c < s.C; ++c) {
            if (!s.is_anchor[s.idx(r, c)]) continue;
            Cell cl;
            cl.r = r;
            cl.c = c;
            cl.rowspan = s.rs[s.idx(r, c)];
            cl.colspan = s.cs[s.idx(r, c)];
            cl.header = r < g.H_hdr;
            t.cells.push_back(cl);
        }
    t.validate();
    return t;
}

namespace {

void emit_rows(const TableStructure& t, int r0, int r1, std::string& out) {
    for (int r = r0; r < r1; ++r) {
        out += "<tr>";
        for (const Cell& cl : t.cells) {
            if (cl.r != r) continue;
            out += "<td";
            if (cl.rowspan > 1) out += " rowspan=\"" + std::to_string(cl.rowspan) + "\"";
            if (cl.colspan > 1) out += " colspan=\"" + std::to_string(cl.colspan) + "\"";
            out += "></td>";
        }
        out += "</tr>";
    }
}

}  // namespace

std::string to_html(const TableStructure& t) {
    t.validate();
    // cells are kept in row-major anchor order for deterministic output
    TableStructure sorted = t;
    std::sort(sorted.cells.begin(), sorted.cells.end(), [](const Cell& a, const Cell& b) {
        return a.r != b.r ? a.r < b.r : a.c < b.c;
    });
    std::string out = "<table>";
    if (sorted.H_hdr > 0) {
        out += "<thead>";
        emit_rows(sorted, 0, sorted.H_hdr, out);
        out += "</thead>";
    }
    if (sorted.H_hdr < sorted.R) {
        out += "<tbody>";
        emit_rows(sorted, sorted.H_hdr, sorted.R, out);
        out += "</tbody>";
    }
    out += "</table>";
    return out;
}

namespace {

struct Tag {
    std::string name;
    bool closing = false;
    int rowspan = 1, colspan = 1;
    size_t offset = 0;  // byte offset of '<'
};

class HtmlScanner {
public:
    explicit HtmlScanner(const std::string& s) : s_(s) {}

    // next tag, skipping whitespace; non-whitespace text outside cells is an error
    Tag next_tag() {
        skip_ws();
        if (pos_ >= s_.size()) throw parse_error("unexpected end of input", pos_);
        if (s_[pos_] != '<') throw parse_error("expected a tag", pos_);
        Tag t;
        t.offset = pos_;
        ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '/') {
            t.closing = true;
            ++pos_;
        }
        const size_t name_start = pos_;
        while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        t.name = s_.substr(name_start, pos_ - name_start);
        if (t.name.empty()) throw parse_error("empty tag name", t.offset);
        while (true) {
            skip_ws();
            if (pos_ >= s_.size()) throw parse_error("unterminated tag", t.offset);
            if (s_[pos_] == '>') {
                ++pos_;
                break;
            }
            if (t.closing) throw parse_error("attributes on closing tag", pos_);
            parse_attr(t);
        }
        return t;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= s_.size();
    }

    size_t pos() const { return pos_; }

    // discard cell text up to the matching </td>; '<' may only start "</td>"
    void skip_cell_text() {
        while (pos_ < s_.size() && s_[pos_] != '<') ++pos_;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    void parse_attr(Tag& t) {
        const size_t start = pos_;
        while (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])))) ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        if (name != "rowspan" && name != "colspan")
            throw parse_error("unsupported attribute '" + name + "'", start);
        if (pos_ >= s_.size() || s_[pos_] != '=') throw parse_error("expected '='", pos_);
        ++pos_;
        char quote = 0;
        if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) quote = s_[pos_++];
        const size_t vstart = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ == vstart) throw parse_error("expected integer attribute value", vstart);
        const int v = std::stoi(s_.substr(vstart, pos_ - vstart));
        if (quote) {
            if (pos_ >= s_.size() || s_[pos_] != quote)
                throw parse_error("unterminated attribute value", vstart);
            ++pos_;
        }
        if (v < 1) throw parse_error("span attribute must be >= 1", vstart);
        (name == "rowspan" ? t.rowspan : t.colspan) = v;
    }

    const std::string& s_;
    size_t pos_ = 0;
};

}  // namespace

TableStructure parse_html_structure(const std::string& html) {
    HtmlScanner sc(html);

    Tag t = sc.next_tag();
    if (t.closing || t.name != "table") throw parse_error("expected <table>", t.offset);

    struct RawCell {
        int row;
        int rowspan, colspan;
        size_t offset;
    };
    std::vector<RawCell> raw;
    int n_rows = 0;
    int header_rows = 0;

    enum class Section { None, Thead, Tbody } section = Section::None;
    bool saw_wrapper = false, saw_bare_tr = false, saw_thead = false, saw_tbody = false;

    auto parse_row = [&](bool in_header) {
        // caller consumed <tr>
        const int row = n_rows++;
        if (in_header) header_rows = n_rows;
        while (true) {
            Tag tag = sc.next_tag();
            if (tag.closing && tag.name == "tr") break;
            if (tag.closing) throw parse_error("unexpected </" + tag.name + "> in row", tag.offset);
            if (tag.name != "td" && tag.name != "th")
                throw parse_error("expected <td> in row, got <" + tag.name + ">", tag.offset);
            raw.push_back({row, tag.rowspan, tag.colspan, tag.offset});
            sc.skip_cell_text();
            Tag close = sc.next_tag();
            if (!close.closing || close.name != tag.name)
                throw parse_error("expected </" + tag.name + ">", close.offset);
        }
    };

    while (true) {
        Tag tag = sc.next_tag();
        if (tag.closing) {
            if (section == Section::Thead && tag.name == "thead") {
                section = Section::None;
                continue;
            }
            if (section == Section::Tbody && tag.name == "tbody") {
                section = Section::None;
                continue;
            }
            if (section == Section::None && tag.name == "table") break;
            throw parse_error("unexpected </" + tag.name + ">", tag.offset);
        }
        if (tag.name == "thead" || tag.name == "tbody") {
            if (section != Section::None)
                throw parse_error("nested section <" + tag.name + ">", tag.offset);
            if (saw_bare_tr)
                throw parse_error("cannot mix bare rows with <" + tag.name + ">", tag.offset);
            if (tag.name == "thead") {
                if (saw_thead || saw_tbody) throw parse_error("misplaced <thead>", tag.offset);
                saw_thead = true;
                section = Section::Thead;
            } else {
                if (saw_tbody) throw parse_error("duplicate <tbody>", tag.offset);
                saw_tbody = true;
                section = Section::Tbody;
            }
            saw_wrapper = true;
            continue;
        }
        if (tag.name == "tr") {
            if (section == Section::None && saw_wrapper)
                throw parse_error("row outside thead/tbody", tag.offset);
            if (section == Section::None) saw_bare_tr = true;
            parse_row(section == Section::Thead);
            continue;
        }
        throw parse_error("unexpected <" + tag.name + ">", tag.offset);
    }
    if (!sc.at_end()) throw parse_error("trailing content after </table>", sc.pos());
    if (n_rows == 0) throw parse_error("table has no rows", 0);

    // occupancy scan: each cell claims the first free column of its row
    std::vector<std::vector<int>> occ(n_rows);  // -1 free, otherwise cell index
    auto widen = [&](int row, int width) {
        if (static_cast<int>(occ[row].size()) < width) occ[row].resize(width, -1);
    };
    TableStructure out;
    for (size_t i = 0; i < raw.size(); ++i) {
        const RawCell& rc = raw[i];
        int col = 0;
        widen(rc.row, col + 1);
        while (col < static_cast<int>(occ[rc.row].size()) && occ[rc.row][col] != -1) ++col;
        if (rc.row + rc.rowspan > n_rows)
            throw parse_error("rowspan exceeds row count", rc.offset);
        for (int dr = 0; dr < rc.rowspan; ++dr) {
            widen(rc.row + dr, col + rc.colspan);
            for (int dc = 0; dc < rc.colspan; ++dc) {
                int& slot = occ[rc.row + dr][col + dc];
                if (slot != -1) throw parse_error("overlapping cell occupancy", rc.offset);
                slot = static_cast<int>(i);
            }
        }
        Cell cl;
        cl.r = rc.row;
        cl.c = col;
        cl.rowspan = rc.rowspan;
        cl.colspan = rc.colspan;
        cl.header = rc.row < header_rows;
        out.cells.push_back(cl);
    }

    int n_cols = 0;
    for (const auto& row : occ) n_cols = std::max(n_cols, static_cast<int>(row.size()));
    if (n_cols == 0) throw parse_error("table has no cells", 0);
    for (int r = 0; r < n_rows; ++r) {
        if (static_cast<int>(occ[r].size()) != n_cols)
            throw parse_error("ragged grid at row " + std::to_string(r), html.size());
        for (int c = 0; c < n_cols; ++c)
            if (occ[r][c] == -1)
                throw parse_error("ragged grid at row " + std::to_string(r), html.size());
    }

    out.R = n_rows;
    out.C = n_cols;
    out.H_hdr = header_rows;
    out.validate();
    return out;
}

std::unique_ptr<HtmlNode> to_tree(const TableStructure& t) {
    t.validate();
    auto table = std::make_unique<HtmlNode>();
    table->label = "table";

    auto make_rows = [&](int r0, int r1, HtmlNode& parent) {
        for (int r = r0; r < r1; ++r) {
            auto tr = std::make_unique<HtmlNode>();
            tr->label = "tr";
            std::vector<const Cell*> row;
            for (const Cell& cl : t.cells)
                if (cl.r == r) row.push_back(&cl);
            std::sort(row.begin(), row.end(),
                      [](const Cell* a, const Cell* b) { return a->c < b->c; });
            for (const Cell* cl : row) {
                auto td = std::make_unique<HtmlNode>();
                td->label = "td";
                td->rowspan = cl->rowspan;
                td->colspan = cl->colspan;
                tr->children.push_back(std::move(td));
            }
            parent.children.push_back(std::move(tr));
        }
    };

    if (t.H_hdr > 0) {
        auto thead = std::make_unique<HtmlNode>();
        thead->label = "thead";
        make_rows(0, t.H_hdr, *thead);
        table->children.push_back(std::move(thead));
    }
    if (t.H_hdr < t.R) {
        auto tbody = std::make_unique<HtmlNode>();
        tbody->label = "tbody";
        make_rows(t.H_hdr, t.R, *tbody);
        table->children.push_back(std::move(tbody));
    }
    return table;
}

int tree_size(const HtmlNode& n) {
    int total = 1;
    for (const auto& c : n.children) total += tree_size(*c);
    return total;
}

}  // namespace fasttab
