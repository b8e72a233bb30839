#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sheetparts/a1.hpp"
#include "sheetparts/ast.hpp"
#include "sheetparts/error.hpp"
#include "sheetparts/sema.hpp"

namespace sheetparts {

struct Placement {
  std::string table;
  CellAddr anchor;
  Orientation orientation = Orientation::y;
  int rows = 1;
  int cols = 1;
  std::vector<Bounds> bounds;  // one per dimension
  std::optional<std::vector<std::string>> dropdown;

  Rect rect() const { return Rect{anchor.sheet, anchor.row, anchor.col, rows, cols}; }
};

/// A fixed text cell produced by the layout itself (labels and headings).
struct LayoutLabel {
  CellAddr addr;
  std::string text;
};

struct PlacementMap {
  std::map<std::string, Placement> tables;
  std::vector<LayoutLabel> labels;

  const Placement& at(const std::string& table) const {
    auto it = tables.find(table);
    if (it == tables.end()) throw CompileError("Unplaced", "table has no placement", table);
    return it->second;
  }
};

/// Row/column displacement of an element from the table's anchor.
inline std::pair<long, long> element_offset(const Placement& p, const IndexTuple& idx) {
  switch (p.orientation) {
    case Orientation::y: return {idx.empty() ? 0 : idx[0] - p.bounds[0].lo, 0};
    case Orientation::x: return {0, idx.empty() ? 0 : idx[0] - p.bounds[0].lo};
    case Orientation::yx: return {idx[0] - p.bounds[0].lo, idx[1] - p.bounds[1].lo};
  }
  return {0, 0};
}

/// Cell holding element `idx` of `table`. Throws CompileError
/// (IndexOutOfBounds) for indices outside the table's dimension types.
inline CellAddr addr_of(const PlacementMap& pm, const std::string& table, const IndexTuple& idx) {
  const Placement& p = pm.at(table);
  if (idx.size() != p.bounds.size())
    throw CompileError("ArityMismatch", "wrong number of indices", table);
  for (std::size_t d = 0; d < idx.size(); ++d)
    if (idx[d] < p.bounds[d].lo || idx[d] > p.bounds[d].hi)
      throw CompileError("IndexOutOfBounds",
                         "index " + std::to_string(idx[d]) + " outside " +
                             std::to_string(p.bounds[d].lo) + ":" + std::to_string(p.bounds[d].hi),
                         table);
  auto [dr, dc] = element_offset(p, idx);
  return CellAddr{p.anchor.sheet, p.anchor.col + static_cast<int>(dc), p.anchor.row + static_cast<int>(dr)};
}

namespace detail {

class LayoutResolver {
 public:
  explicit LayoutResolver(const CheckedProgram& cp) : cp_(cp) {}

  PlacementMap run() {
    for (const auto& l : cp_.program.layouts) grid(l);
    for (const auto& p : cp_.program.places) place(p);
    check_required();
    check_overlaps();
    return std::move(pm_);
  }

 private:
  struct Occupied {
    Rect rect;
    std::string what;
  };

  struct Extent {
    int rows, cols;
    Orientation orientation;
    std::vector<Bounds> bounds;
  };

  Extent extent(const std::string& name, std::optional<Orientation> orient) const {
    const TableDecl* t = cp_.table(name);
    if (!t) throw LayoutError("UnknownName", "layout names an undeclared table", name);
    auto bounds = cp_.dim_bounds(*t);
    if (!bounds) throw LayoutError("UnboundHole", "table dimensions are not bound", name);
    Orientation o = orient.value_or(t->dims.size() == 2 ? Orientation::yx : Orientation::y);
    if ((o == Orientation::yx) != (t->dims.size() == 2))
      throw LayoutError("BadOrientation",
                        std::string("orientation ") + orientation_name(o) + " does not fit a " +
                            std::to_string(t->dims.size()) + "-dimensional table",
                        name);
    long rows = 1, cols = 1;
    if (t->dims.size() == 1) (o == Orientation::y ? rows : cols) = (*bounds)[0].size();
    if (t->dims.size() == 2) {
      rows = (*bounds)[0].size();
      cols = (*bounds)[1].size();
    }
    if (rows > kMaxRows || cols > kMaxCols)
      throw LayoutError("OutOfSheet", "table does not fit on a sheet", name);
    return Extent{static_cast<int>(rows), static_cast<int>(cols), o, *bounds};
  }

  void add_table(const std::string& name, const CellAddr& anchor, const Extent& ext,
                 std::optional<std::vector<std::string>> dropdown) {
    if (pm_.tables.count(name)) throw LayoutError("DuplicatePlacement", "table placed twice", name);
    Placement p{name, anchor, ext.orientation, ext.rows, ext.cols, ext.bounds, std::move(dropdown)};
    occupy(p.rect(), "table '" + name + "'");
    pm_.tables.emplace(name, std::move(p));
  }

  void occupy(const Rect& r, std::string what) {
    if (r.last_row() > kMaxRows || r.last_col() > kMaxCols)
      throw LayoutError("OutOfSheet", what + " extends beyond the sheet", r.sheet);
    if (r.rows > 0 && r.cols > 0) occupied_.push_back({r, std::move(what)});
  }

  void grid(const LayoutDirective& l) {
    if (!valid_sheet_name(l.sheet)) throw LayoutError("BadSheetName", "invalid sheet name", l.sheet);
    long row = 1;
    long heading_row = 0;  // 0: no pending heading
    for (const RowGroup& group : l.rows) {
      if (group.size() == 1 && group[0].kind == LayoutItem::Kind::heading) {
        heading_row = row;
        row += 1;
        continue;
      }
      long col = 1;
      long height = 0;
      for (const LayoutItem& item : group) {
        if (row > kMaxRows || col > kMaxCols)
          throw LayoutError("OutOfSheet", "layout extends beyond the sheet", l.sheet);
        CellAddr at{l.sheet, static_cast<int>(col), static_cast<int>(row)};
        long w = 0, h = 0;
        switch (item.kind) {
          case LayoutItem::Kind::table: {
            Extent ext = extent(item.name, item.orientation);
            add_table(item.name, at, ext, item.dropdown);
            if (heading_row) label(CellAddr{l.sheet, at.col, static_cast<int>(heading_row)}, item.name);
            h = ext.rows;
            w = ext.cols;
            break;
          }
          case LayoutItem::Kind::skip:
            h = item.skip_rows;
            w = item.skip_cols;
            occupy(Rect{l.sheet, at.row, at.col, static_cast<int>(h), static_cast<int>(w)}, "skip");
            break;
          case LayoutItem::Kind::label:
            label(at, item.name);
            h = w = 1;
            break;
          case LayoutItem::Kind::heading:
            // A heading inside a row group labels nothing; it still takes a cell.
            h = w = 1;
            break;
        }
        col += w;
        height = std::max(height, h);
      }
      heading_row = 0;
      row += height;
    }
  }

  void label(const CellAddr& at, const std::string& text) {
    occupy(Rect{at.sheet, at.row, at.col, 1, 1}, "label '" + text + "'");
    pm_.labels.push_back({at, text});
  }

  void place(const PlaceDirective& p) {
    if (!valid_sheet_name(p.sheet)) throw LayoutError("BadSheetName", "invalid sheet name", p.sheet);
    auto pos = parse_a1_position(p.anchor);
    if (!pos) throw LayoutError("BadCellRef", "bad anchor cell '" + p.anchor + "'", p.table);
    Extent ext = extent(p.table, p.orientation);
    add_table(p.table, CellAddr{p.sheet, pos->first, pos->second}, ext, std::nullopt);
  }

  void check_required() {
    std::set<std::string> needed;
    for (const auto& eq : cp_.program.equations) {
      needed.insert(eq.table);
      collect_refs(eq.rhs, needed);
    }
    for (const auto& name : needed)
      if (cp_.table(name) && !pm_.tables.count(name))
        throw LayoutError("Unplaced", "table is used but never placed", name);
  }

  static void collect_refs(const Expr& e, std::set<std::string>& out) {
    if (e.kind == Expr::Kind::table_ref) out.insert(e.text);
    for (const auto& a : e.args) collect_refs(a, out);
    for (const auto& ix : e.indices)
      for (const auto& p : ix.parts) collect_refs(p, out);
  }

  void check_overlaps() const {
    for (std::size_t i = 0; i < occupied_.size(); ++i)
      for (std::size_t j = i + 1; j < occupied_.size(); ++j)
        if (occupied_[i].rect.intersects(occupied_[j].rect))
          throw LayoutError("Overlap",
                            occupied_[i].what + " overlaps " + occupied_[j].what + " on sheet " +
                                occupied_[i].rect.sheet,
                            occupied_[i].rect.sheet);
  }

  const CheckedProgram& cp_;
  PlacementMap pm_;
  std::vector<Occupied> occupied_;
};

}  // namespace detail

/// Assigns every placed table an anchor, orientation and extent. Throws
/// LayoutError on overlaps, double placement, missing placement, or cells
/// beyond the sheet limits.
inline PlacementMap resolve_layout(const CheckedProgram& cp) {
  return detail::LayoutResolver(cp).run();
}

}  // namespace sheetparts
