#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "sheetparts/ast.hpp"
#include "sheetparts/grid.hpp"
#include "sheetparts/layout.hpp"
#include "sheetparts/printer.hpp"
#include "sheetparts/sema.hpp"

namespace sheetparts {

/// Replaces bound constants, index variables in `env`, and upb/lwb by their
/// values, then evaluates arithmetic whose operands are all literals. Table
/// and cell references are left in place (their index expressions are
/// folded). Throws CompileError (DivisionByZero) for a literal x/0.
inline Expr fold_constants(const Expr& e, const CheckedProgram& cp, const IndexEnv& env = {}) {
  Expr out = e;
  switch (e.kind) {
    case Expr::Kind::name: {
      if (auto it = env.find(e.text); it != env.end())
        return Expr::make_number(static_cast<double>(it->second), e.pos);
      if (auto it = cp.constants.find(e.text); it != cp.constants.end()) {
        if (auto* d = std::get_if<double>(&it->second.value)) return Expr::make_number(*d, e.pos);
        return Expr::make_text(std::get<std::string>(it->second.value), e.pos);
      }
      return out;
    }
    case Expr::Kind::bound: {
      auto it = cp.type_bounds.find(e.text);
      if (it == cp.type_bounds.end()) return out;
      return Expr::make_number(static_cast<double>(e.upper ? it->second.hi : it->second.lo), e.pos);
    }
    case Expr::Kind::unary_minus: {
      out.args[0] = fold_constants(e.args[0], cp, env);
      if (out.args[0].kind == Expr::Kind::number) return Expr::make_number(-out.args[0].number, e.pos);
      return out;
    }
    case Expr::Kind::binary: {
      out.args[0] = fold_constants(e.args[0], cp, env);
      out.args[1] = fold_constants(e.args[1], cp, env);
      const Expr& a = out.args[0];
      const Expr& b = out.args[1];
      if (!detail::is_arith(e.op) || a.kind != Expr::Kind::number || b.kind != Expr::Kind::number)
        return out;
      switch (e.op) {
        case BinOp::add: return Expr::make_number(a.number + b.number, e.pos);
        case BinOp::sub: return Expr::make_number(a.number - b.number, e.pos);
        case BinOp::mul: return Expr::make_number(a.number * b.number, e.pos);
        case BinOp::div:
          if (b.number == 0) throw CompileError("DivisionByZero", "division by literal zero", {}, e.pos);
          return Expr::make_number(a.number / b.number, e.pos);
        default: return out;
      }
    }
    case Expr::Kind::call:
      for (auto& a : out.args) a = fold_constants(a, cp, env);
      return out;
    case Expr::Kind::table_ref:
      for (auto& ix : out.indices)
        for (auto& p : ix.parts) p = fold_constants(p, cp, env);
      return out;
    default: return out;
  }
}

namespace detail {

class CodeGen {
 public:
  CodeGen(const CheckedProgram& cp, const PlacementMap& pm) : cp_(cp), pm_(pm) {}

  /// Template expression -> formula expression for one index binding.
  Expr rewrite(const Expr& e, const IndexEnv& env) const {
    switch (e.kind) {
      case Expr::Kind::number:
      case Expr::Kind::text:
      case Expr::Kind::cell_ref: return e;
      case Expr::Kind::name:
      case Expr::Kind::bound: {
        Expr f = fold_constants(e, cp_, env);
        if (f.kind == Expr::Kind::name || f.kind == Expr::Kind::bound)
          throw CompileError("UnknownName", "unresolved name", e.text, e.pos);
        return f;
      }
      case Expr::Kind::unary_minus:
      case Expr::Kind::binary:
      case Expr::Kind::call: {
        Expr out = e;
        for (auto& a : out.args) a = rewrite(a, env);
        return fold_constants(out, cp_);
      }
      case Expr::Kind::table_ref: return reference(e, env);
    }
    return e;
  }

  Expr reference(const Expr& ref, const IndexEnv& env) const {
    const Placement& p = pm_.at(ref.text);
    const TableDecl* t = cp_.table(ref.text);
    if (!t) throw CompileError("UnknownName", "unknown table", ref.text, ref.pos);
    if (t->dims.empty()) return Expr::make_cell(p.anchor);

    std::set<std::string> vars;
    for (const auto& [k, v] : env) vars.insert(k);

    // Per axis: start offset from the anchor and extent, each either a
    // static number or a runtime expression.
    Expr start[2] = {Expr::make_number(0), Expr::make_number(0)};
    Expr len[2] = {Expr::make_number(1), Expr::make_number(1)};
    for (std::size_t d = 0; d < ref.indices.size(); ++d) {
      const IndexExpr& ix = ref.indices[d];
      const Bounds& b = p.bounds[d];
      int axis = p.orientation == Orientation::x ? 1 : static_cast<int>(d);
      switch (classify_index(ix, vars, cp_)) {
        case IndexClass::all:
          len[axis] = Expr::make_number(static_cast<double>(b.size()));
          break;
        case IndexClass::static_index: {
          long v = static_value(ix.parts[0], env, b, ref);
          start[axis] = Expr::make_number(static_cast<double>(v - b.lo));
          break;
        }
        case IndexClass::static_range: {
          long lo = static_value(ix.parts[0], env, b, ref);
          long hi = static_value(ix.parts[1], env, b, ref);
          if (lo > hi) throw CompileError("IndexOutOfBounds", "empty range", ref.text, ref.pos);
          start[axis] = Expr::make_number(static_cast<double>(lo - b.lo));
          len[axis] = Expr::make_number(static_cast<double>(hi - lo + 1));
          break;
        }
        case IndexClass::runtime_index:
          start[axis] = offset_from(rewrite(ix.parts[0], env), b.lo);
          break;
        case IndexClass::runtime_range: {
          Expr lo = rewrite(ix.parts[0], env);
          Expr hi = rewrite(ix.parts[1], env);
          start[axis] = offset_from(lo, b.lo);
          len[axis] = fold_constants(
              Expr::make_binary(BinOp::add, Expr::make_binary(BinOp::sub, std::move(hi), std::move(lo)),
                                Expr::make_number(1)),
              cp_);
          break;
        }
      }
    }

    bool all_static = true;
    for (int a = 0; a < 2; ++a)
      all_static = all_static && start[a].kind == Expr::Kind::number && len[a].kind == Expr::Kind::number;

    if (all_static) {
      CellAddr first{p.anchor.sheet, p.anchor.col + static_cast<int>(start[1].number),
                     p.anchor.row + static_cast<int>(start[0].number)};
      if (len[0].number == 1 && len[1].number == 1) return Expr::make_cell(first);
      CellAddr last{p.anchor.sheet, first.col + static_cast<int>(len[1].number) - 1,
                    first.row + static_cast<int>(len[0].number) - 1};
      return Expr::make_cell(first, last);
    }

    std::vector<Expr> args{Expr::make_cell(p.anchor), start[0], start[1]};
    bool unit = len[0].kind == Expr::Kind::number && len[0].number == 1 &&
                len[1].kind == Expr::Kind::number && len[1].number == 1;
    if (!unit) {
      args.push_back(len[0]);
      args.push_back(len[1]);
    }
    return Expr::make_call("offset", std::move(args), ref.pos);
  }

  FormulaGrid compile() const {
    FormulaGrid grid;
    for (const auto& l : pm_.labels) grid.set_content(l.addr, CellContent::literal_text(l.text));
    for (const auto& [name, p] : pm_.tables) {
      if (!p.dropdown) continue;
      for (int r = 0; r < p.rows; ++r)
        for (int c = 0; c < p.cols; ++c) {
          CellAddr a{p.anchor.sheet, p.anchor.col + c, p.anchor.row + r};
          if (!p.dropdown->empty()) grid.set_content(a, CellContent::literal_text(p.dropdown->front()));
          grid.set_validation(a, *p.dropdown);
        }
    }

    std::set<CellAddr, RowMajorLess> written;
    const auto& eqs = cp_.program.equations;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
      const Equation& eq = eqs[i];
      const TableDecl* t = cp_.table(eq.table);
      for (const IndexTuple& tuple : cp_.coverage[i]) {
        CellAddr at = addr_of(pm_, eq.table, tuple);
        if (!written.insert(at).second)
          throw CompileError("OverlappingEquations", "cell written twice: " + render_a1(at), eq.table, eq.pos);
        Expr f = rewrite(eq.rhs, bind_tuple(eq, tuple));
        CellContent content;
        if (f.kind == Expr::Kind::number) content = CellContent::literal_number(f.number);
        else if (f.kind == Expr::Kind::text) content = CellContent::literal_text(f.text);
        else content = CellContent::formula(render_formula(f, at.sheet), t->elem_type);
        grid.set_content(at, std::move(content));
      }
    }
    return grid;
  }

 private:
  long static_value(const Expr& e, const IndexEnv& env, const Bounds& b, const Expr& ref) const {
    auto v = eval_static(e, env, cp_);
    if (!v || std::trunc(*v) != *v)
      throw CompileError("IndexOutOfBounds", "index is not an integer", ref.text, ref.pos);
    long k = static_cast<long>(*v);
    if (k < b.lo || k > b.hi)
      throw CompileError("IndexOutOfBounds",
                         "index " + std::to_string(k) + " outside " + std::to_string(b.lo) + ":" +
                             std::to_string(b.hi),
                         ref.text, ref.pos);
    return k;
  }

  Expr offset_from(Expr e, long lo) const {
    if (lo == 0) return e;
    return fold_constants(Expr::make_binary(BinOp::sub, std::move(e), Expr::make_number(static_cast<double>(lo))),
                          cp_);
  }

  const CheckedProgram& cp_;
  const PlacementMap& pm_;
};

}  // namespace detail

/// Expands every equation over its coverage and writes one cell per index
/// tuple. Bare-literal results become literal cells; everything else a
/// formula.
inline FormulaGrid compile(const CheckedProgram& cp, const PlacementMap& pm) {
  return detail::CodeGen(cp, pm).compile();
}

/// Formula text for a single table reference under `env`, as it would
/// appear in a cell on `from_sheet`.
inline std::string rewrite_reference(const Expr& ref, const IndexEnv& env, const CheckedProgram& cp,
                                     const PlacementMap& pm, const std::string& from_sheet) {
  return render_formula(detail::CodeGen(cp, pm).reference(ref, env), from_sheet);
}

/// Everything produced by compiling one closed program.
struct Compilation {
  CheckedProgram checked;
  PlacementMap placements;
  FormulaGrid grid;
};

inline Compilation compile_program(const Program& program) {
  Compilation c{check(program, true), {}, {}};
  c.placements = resolve_layout(c.checked);
  c.grid = compile(c.checked, c.placements);
  return c;
}

}  // namespace sheetparts
