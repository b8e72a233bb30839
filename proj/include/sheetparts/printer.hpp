#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include "sheetparts/ast.hpp"
#include "sheetparts/number.hpp"

namespace sheetparts {

inline std::string quote_text(std::string_view s, char q = '"') {
  std::string out(1, q);
  for (char c : s) {
    out += c;
    if (c == q) out += q;
  }
  out += q;
  return out;
}

namespace detail {

enum class Dialect { source, formula };

inline constexpr int kUnaryPrecedence = 5;

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline void print_expr(std::string& out, const Expr& e, Dialect d, std::string_view sheet,
                       int parent_prec, bool right_operand);

inline void print_index(std::string& out, const IndexExpr& ix, Dialect d) {
  switch (ix.kind) {
    case IndexExpr::Kind::all: out += "all"; break;
    case IndexExpr::Kind::scalar: print_expr(out, ix.parts[0], d, {}, 0, false); break;
    case IndexExpr::Kind::range:
      print_expr(out, ix.parts[0], d, {}, 0, false);
      out += ":";
      print_expr(out, ix.parts[1], d, {}, 0, false);
      break;
  }
}

inline void print_expr(std::string& out, const Expr& e, Dialect d, std::string_view sheet,
                       int parent_prec, bool right_operand) {
  switch (e.kind) {
    case Expr::Kind::number:
      // A folded negative literal in operand position reads as unary minus.
      if (e.number < 0 && parent_prec > kUnaryPrecedence) {
        out += "(" + format_number(e.number) + ")";
      } else {
        out += format_number(e.number);
      }
      return;
    case Expr::Kind::text: out += quote_text(e.text); return;
    case Expr::Kind::name: out += e.text; return;
    case Expr::Kind::bound:
      out += e.upper ? "upb(" : "lwb(";
      out += e.text + ")";
      return;
    case Expr::Kind::cell_ref: {
      CellAddr first = e.cell;
      if (!first.sheet.empty() && first.sheet != sheet) out += first.sheet + "!";
      out += render_a1(first);
      if (e.cell_end) out += ":" + render_a1(*e.cell_end);
      return;
    }
    case Expr::Kind::call: {
      out += d == Dialect::formula ? upper(e.text) : e.text;
      out += "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += d == Dialect::formula ? "," : ", ";
        print_expr(out, e.args[i], d, sheet, 0, false);
      }
      out += ")";
      return;
    }
    case Expr::Kind::table_ref: {
      out += e.text + "[";
      for (std::size_t i = 0; i < e.indices.size(); ++i) {
        if (i) out += ", ";
        print_index(out, e.indices[i], d);
      }
      out += "]";
      return;
    }
    case Expr::Kind::unary_minus: {
      bool paren = parent_prec > kUnaryPrecedence;
      if (paren) out += "(";
      out += "-";
      print_expr(out, e.args[0], d, sheet, kUnaryPrecedence, true);
      if (paren) out += ")";
      return;
    }
    case Expr::Kind::binary: {
      int prec = binop_precedence(e.op);
      bool paren = prec < parent_prec || (prec == parent_prec && right_operand);
      if (paren) out += "(";
      print_expr(out, e.args[0], d, sheet, prec, false);
      if (d == Dialect::source) {
        out += " ";
        out += binop_text(e.op);
        out += " ";
      } else {
        out += binop_text(e.op);
      }
      print_expr(out, e.args[1], d, sheet, prec, true);
      if (paren) out += ")";
      return;
    }
  }
}

}  // namespace detail

/// Renders an expression in template source syntax.
inline std::string print_expr(const Expr& e) {
  std::string out;
  detail::print_expr(out, e, detail::Dialect::source, {}, 0, false);
  return out;
}

/// Renders a compiled expression as spreadsheet formula text without the
/// leading '='. References into `sheet` are left unqualified.
inline std::string render_formula(const Expr& e, std::string_view sheet = {}) {
  std::string out;
  detail::print_expr(out, e, detail::Dialect::formula, sheet, 0, false);
  return out;
}

inline std::string print_literal(const Literal& lit) {
  if (auto* d = std::get_if<double>(&lit.value)) return format_number(*d);
  return quote_text(std::get<std::string>(lit.value));
}

inline std::string print_bound(const BoundSpec& b) {
  if (auto* v = std::get_if<long>(&b.value)) return std::to_string(*v);
  return std::get<std::string>(b.value);
}

inline std::string print_index_spec(const IndexSpec& s) {
  switch (s.kind) {
    case IndexSpec::Kind::literal: return std::to_string(s.value);
    case IndexSpec::Kind::var: return s.var;
    case IndexSpec::Kind::guarded:
      return s.var + " " + binop_text(s.guard_op) + " " + print_expr(s.guard[0]);
  }
  return {};
}

inline std::string print_layout_item(const LayoutItem& item) {
  switch (item.kind) {
    case LayoutItem::Kind::heading: return "heading";
    case LayoutItem::Kind::label: return quote_text(item.name, '\'');
    case LayoutItem::Kind::skip:
      return "skip(" + std::to_string(item.skip_rows) + ", " + std::to_string(item.skip_cols) + ")";
    case LayoutItem::Kind::table: {
      if (item.dropdown) {
        std::string out = "as(" + item.name + ", " +
                          orientation_name(item.orientation.value_or(Orientation::y)) + ", [";
        for (std::size_t i = 0; i < item.dropdown->size(); ++i) {
          if (i) out += ", ";
          out += quote_text((*item.dropdown)[i], '\'');
        }
        return out + "])";
      }
      if (item.orientation) return item.name + " as " + orientation_name(*item.orientation);
      return item.name;
    }
  }
  return {};
}

/// Pretty-prints every statement, grouped by kind. Comments are dropped.
inline std::string print_program(const Program& p) {
  std::string out;
  for (const auto& c : p.constants) {
    out += "constant " + c.name;
    if (c.value) out += " = " + print_literal(*c.value);
    out += ".\n";
  }
  for (const auto& t : p.index_types) {
    out += "type " + t.name;
    if (t.bounds) out += " = " + print_bound(t.bounds->first) + ":" + print_bound(t.bounds->second);
    out += ".\n";
  }
  for (const auto& t : p.tables) {
    out += "table " + t.name + " :";
    for (const auto& d : t.dims) out += " " + d;
    out += std::string(" -> ") + elem_type_name(t.elem_type) + ".\n";
  }
  for (const auto& eq : p.equations) {
    out += eq.table;
    if (!eq.lhs.empty()) {
      out += "[";
      for (std::size_t i = 0; i < eq.lhs.size(); ++i) {
        if (i) out += ", ";
        out += print_index_spec(eq.lhs[i]);
      }
      out += "]";
    }
    out += " = " + print_expr(eq.rhs) + ".\n";
  }
  for (const auto& l : p.layouts) {
    out += "layout(" + quote_text(l.sheet, '\'') + ", rows(";
    for (std::size_t r = 0; r < l.rows.size(); ++r) {
      if (r) out += ", ";
      const RowGroup& g = l.rows[r];
      if (g.size() == 1 && g[0].kind == LayoutItem::Kind::heading) {
        out += "heading";
        continue;
      }
      out += "[";
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (i) out += ", ";
        out += print_layout_item(g[i]);
      }
      out += "]";
    }
    out += ")).\n";
  }
  for (const auto& pl : p.places) {
    out += "place(" + pl.table + ", " + quote_text(pl.sheet, '\'') + ", " +
           quote_text(pl.anchor, '\'') + ", " + orientation_name(pl.orientation) + ").\n";
  }
  return out;
}

}  // namespace sheetparts
