#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sheetparts/a1.hpp"
#include "sheetparts/ast.hpp"

namespace sheetparts {

struct CellContent {
  enum class Kind { blank, formula, number, text };
  Kind kind = Kind::blank;
  std::string text;  // formula text (no leading '=') or literal text
  double number = 0;
  ElemType type = ElemType::general;  // formatting tag for formulas

  static CellContent formula(std::string f, ElemType t = ElemType::general) {
    return {Kind::formula, std::move(f), 0, t};
  }
  static CellContent literal_number(double v) { return {Kind::number, {}, v, ElemType::general}; }
  static CellContent literal_text(std::string s) { return {Kind::text, std::move(s), 0, ElemType::general}; }

  bool operator==(const CellContent& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
      case Kind::blank: return true;
      case Kind::number: return number == o.number;
      case Kind::text: return text == o.text;
      case Kind::formula: return text == o.text && type == o.type;
    }
    return false;
  }
};

struct GridCell {
  CellContent content;
  std::optional<std::vector<std::string>> validation;  // dropdown options
  bool operator==(const GridCell&) const = default;
};

/// Compiled artifact: cells by address, ordered sheet/row/column.
class FormulaGrid {
 public:
  using Cells = std::map<CellAddr, GridCell, RowMajorLess>;

  void set(const CellAddr& a, GridCell c) { cells_[a] = std::move(c); }
  void set_content(const CellAddr& a, CellContent c) { cells_[a].content = std::move(c); }
  void set_validation(const CellAddr& a, std::vector<std::string> opts) {
    cells_[a].validation = std::move(opts);
  }

  const GridCell* find(const CellAddr& a) const {
    auto it = cells_.find(a);
    return it == cells_.end() ? nullptr : &it->second;
  }
  bool contains(const CellAddr& a) const { return cells_.count(a) > 0; }
  void erase(const CellAddr& a) { cells_.erase(a); }

  const Cells& cells() const { return cells_; }
  bool empty() const { return cells_.empty(); }
  std::size_t size() const { return cells_.size(); }

  std::vector<std::string> sheets() const {
    std::set<std::string> s;
    for (const auto& [a, c] : cells_) s.insert(a.sheet);
    return {s.begin(), s.end()};
  }

  bool operator==(const FormulaGrid& o) const { return cells_ == o.cells_; }

 private:
  Cells cells_;
};

}  // namespace sheetparts
