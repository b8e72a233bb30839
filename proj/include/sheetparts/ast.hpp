#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sheetparts/a1.hpp"
#include "sheetparts/error.hpp"

namespace sheetparts {

enum class BinOp { add, sub, mul, div, concat, eq, ne, lt, gt, le, ge };

inline const char* binop_text(BinOp op) {
  switch (op) {
    case BinOp::add: return "+";
    case BinOp::sub: return "-";
    case BinOp::mul: return "*";
    case BinOp::div: return "/";
    case BinOp::concat: return "&";
    case BinOp::eq: return "=";
    case BinOp::ne: return "<>";
    case BinOp::lt: return "<";
    case BinOp::gt: return ">";
    case BinOp::le: return "<=";
    case BinOp::ge: return ">=";
  }
  return "?";
}

/// Binding strength; higher binds tighter.
inline int binop_precedence(BinOp op) {
  switch (op) {
    case BinOp::eq: case BinOp::ne: case BinOp::lt:
    case BinOp::gt: case BinOp::le: case BinOp::ge: return 1;
    case BinOp::concat: return 2;
    case BinOp::add: case BinOp::sub: return 3;
    case BinOp::mul: case BinOp::div: return 4;
  }
  return 0;
}

inline bool is_comparison(BinOp op) { return binop_precedence(op) == 1; }

struct IndexExpr;

/// Expression tree shared by template source and compiled formulae. Template
/// expressions use `name`, `table_ref` and `bound`; formulae use `cell_ref`.
struct Expr {
  enum class Kind { number, text, name, call, unary_minus, binary, table_ref, bound, cell_ref };

  Kind kind = Kind::number;
  double number = 0;
  std::string text;              // string value, name, function name, table or type name
  BinOp op = BinOp::add;         // binary
  bool upper = true;             // bound: upb (true) or lwb (false)
  std::vector<Expr> args;        // call arguments, unary/binary operands
  std::vector<IndexExpr> indices;  // table_ref
  CellAddr cell;                 // cell_ref: first cell; sheet empty = same sheet
  std::optional<CellAddr> cell_end;  // cell_ref: range end
  SourcePos pos;

  static Expr make_number(double v, SourcePos p = {}) {
    Expr e;
    e.kind = Kind::number;
    e.number = v;
    e.pos = p;
    return e;
  }
  static Expr make_text(std::string s, SourcePos p = {}) {
    Expr e;
    e.kind = Kind::text;
    e.text = std::move(s);
    e.pos = p;
    return e;
  }
  static Expr make_name(std::string s, SourcePos p = {}) {
    Expr e;
    e.kind = Kind::name;
    e.text = std::move(s);
    e.pos = p;
    return e;
  }
  static Expr make_binary(BinOp op, Expr l, Expr r, SourcePos p = {}) {
    Expr e;
    e.kind = Kind::binary;
    e.op = op;
    e.args.push_back(std::move(l));
    e.args.push_back(std::move(r));
    e.pos = p;
    return e;
  }
  static Expr make_call(std::string fn, std::vector<Expr> args, SourcePos p = {}) {
    Expr e;
    e.kind = Kind::call;
    e.text = std::move(fn);
    e.args = std::move(args);
    e.pos = p;
    return e;
  }
  static Expr make_cell(CellAddr a, std::optional<CellAddr> end = std::nullopt) {
    Expr e;
    e.kind = Kind::cell_ref;
    e.cell = std::move(a);
    e.cell_end = std::move(end);
    return e;
  }
};

struct IndexExpr {
  enum class Kind { scalar, range, all };
  Kind kind = Kind::scalar;
  std::vector<Expr> parts;  // scalar: 1, range: 2 (lo, hi), all: 0
};

// Structural equality ignores source positions.
inline bool operator==(const Expr& a, const Expr& b);

inline bool operator==(const IndexExpr& a, const IndexExpr& b) {
  return a.kind == b.kind && a.parts == b.parts;
}

inline bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::number: return a.number == b.number;
    case Expr::Kind::text:
    case Expr::Kind::name: return a.text == b.text;
    case Expr::Kind::call: return a.text == b.text && a.args == b.args;
    case Expr::Kind::unary_minus: return a.args == b.args;
    case Expr::Kind::binary: return a.op == b.op && a.args == b.args;
    case Expr::Kind::table_ref: return a.text == b.text && a.indices == b.indices;
    case Expr::Kind::bound: return a.text == b.text && a.upper == b.upper;
    case Expr::Kind::cell_ref: return a.cell == b.cell && a.cell_end == b.cell_end;
  }
  return false;
}

enum class ElemType { general, text, number };

inline const char* elem_type_name(ElemType t) {
  switch (t) {
    case ElemType::general: return "general";
    case ElemType::text: return "text";
    case ElemType::number: return "number";
  }
  return "general";
}

enum class Orientation { y, x, yx };

inline const char* orientation_name(Orientation o) {
  switch (o) {
    case Orientation::y: return "y";
    case Orientation::x: return "x";
    case Orientation::yx: return "yx";
  }
  return "y";
}

struct Literal {
  std::variant<double, std::string> value;
  bool operator==(const Literal&) const = default;
};

struct ConstantDecl {
  std::string name;
  std::optional<Literal> value;  // absent: template parameter
  SourcePos pos;
  bool operator==(const ConstantDecl& o) const { return name == o.name && value == o.value; }
};

struct Bounds {
  long lo = 1;
  long hi = 1;
  long size() const { return hi - lo + 1; }
  bool operator==(const Bounds&) const = default;
};

/// A bound written as an integer or as the name of an integer constant.
struct BoundSpec {
  std::variant<long, std::string> value;
  bool operator==(const BoundSpec&) const = default;
};

struct IndexTypeDecl {
  std::string name;
  std::optional<std::pair<BoundSpec, BoundSpec>> bounds;  // absent: template parameter
  SourcePos pos;
  bool operator==(const IndexTypeDecl& o) const { return name == o.name && bounds == o.bounds; }
};

struct TableDecl {
  std::string name;
  std::vector<std::string> dims;
  ElemType elem_type = ElemType::general;
  SourcePos pos;
  bool operator==(const TableDecl& o) const {
    return name == o.name && dims == o.dims && elem_type == o.elem_type;
  }
};

struct IndexSpec {
  enum class Kind { literal, var, guarded };
  Kind kind = Kind::literal;
  long value = 0;       // literal
  std::string var;      // var, guarded
  BinOp guard_op = BinOp::gt;
  std::vector<Expr> guard;  // guarded: exactly one expression
  bool operator==(const IndexSpec& o) const {
    return kind == o.kind && value == o.value && var == o.var &&
           (kind != Kind::guarded || (guard_op == o.guard_op && guard == o.guard));
  }
};

struct Equation {
  std::string table;
  std::vector<IndexSpec> lhs;
  Expr rhs;
  SourcePos pos;
  bool operator==(const Equation& o) const {
    return table == o.table && lhs == o.lhs && rhs == o.rhs;
  }
};

struct LayoutItem {
  enum class Kind { table, skip, heading, label };
  Kind kind = Kind::table;
  std::string name;  // table name or label text
  std::optional<Orientation> orientation;
  std::optional<std::vector<std::string>> dropdown;
  int skip_rows = 0;
  int skip_cols = 0;
  bool operator==(const LayoutItem&) const = default;
};

using RowGroup = std::vector<LayoutItem>;

struct LayoutDirective {
  std::string sheet;
  std::vector<RowGroup> rows;
  SourcePos pos;
  bool operator==(const LayoutDirective& o) const { return sheet == o.sheet && rows == o.rows; }
};

struct PlaceDirective {
  std::string table;
  std::string sheet;
  std::string anchor;  // A1 text
  Orientation orientation = Orientation::y;
  SourcePos pos;
  bool operator==(const PlaceDirective& o) const {
    return table == o.table && sheet == o.sheet && anchor == o.anchor &&
           orientation == o.orientation;
  }
};

struct DocChunk {
  enum class Kind { prose, code };
  Kind kind = Kind::prose;
  std::string text;
};

struct Program {
  std::vector<ConstantDecl> constants;
  std::vector<IndexTypeDecl> index_types;
  std::vector<TableDecl> tables;
  std::vector<Equation> equations;
  std::vector<LayoutDirective> layouts;
  std::vector<PlaceDirective> places;
  std::vector<DocChunk> doc_chunks;  // source order, for literate rendering only

  /// Statement-level equality; doc chunks and positions are ignored.
  bool same_statements(const Program& o) const {
    return constants == o.constants && index_types == o.index_types && tables == o.tables &&
           equations == o.equations && layouts == o.layouts && places == o.places;
  }
};

}  // namespace sheetparts
