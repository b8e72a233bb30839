#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sheetparts/ast.hpp"
#include "sheetparts/error.hpp"
#include "sheetparts/printer.hpp"

namespace sheetparts {

enum class IndexClass { static_index, static_range, runtime_index, runtime_range, all };

inline const char* index_class_name(IndexClass c) {
  switch (c) {
    case IndexClass::static_index: return "StaticIndex";
    case IndexClass::static_range: return "StaticRange";
    case IndexClass::runtime_index: return "RuntimeIndex";
    case IndexClass::runtime_range: return "RuntimeRange";
    case IndexClass::all: return "All";
  }
  return "?";
}

using IndexTuple = std::vector<long>;

struct RefClassification {
  std::string table;
  std::vector<IndexClass> dims;
};

/// A program whose names, types and coverage have been verified.
struct CheckedProgram {
  Program program;
  std::map<std::string, Literal> constants;         // bound constants only
  std::map<std::string, Bounds> type_bounds;        // bound index types only
  std::map<std::string, std::size_t> table_index;   // name -> position in program.tables
  std::set<std::string> unbound_constants;
  std::set<std::string> unbound_types;
  std::vector<std::vector<IndexTuple>> coverage;    // per equation; empty when dims unbound
  std::vector<std::vector<RefClassification>> ref_classes;  // per equation, pre-order

  const TableDecl* table(const std::string& name) const {
    auto it = table_index.find(name);
    return it == table_index.end() ? nullptr : &program.tables[it->second];
  }

  /// Bounds for each dimension of a table; nullopt if any is unbound.
  std::optional<std::vector<Bounds>> dim_bounds(const TableDecl& t) const {
    std::vector<Bounds> out;
    for (const auto& d : t.dims) {
      auto it = type_bounds.find(d);
      if (it == type_bounds.end()) return std::nullopt;
      out.push_back(it->second);
    }
    return out;
  }
};

/// Variable bindings while expanding an equation over one index tuple.
using IndexEnv = std::map<std::string, long>;

namespace detail {

inline const std::set<std::string>& known_functions() {
  static const std::set<std::string> fns{"if",  "match", "isna", "iserror", "and", "or",
                                         "not", "offset", "count", "rand", "floor", "len",
                                         "sum"};
  return fns;
}

inline bool is_arith(BinOp op) {
  return op == BinOp::add || op == BinOp::sub || op == BinOp::mul || op == BinOp::div;
}

/// Zero-dim tables accept `t[]` and `t[1]`; everything else needs one index
/// per dimension.
inline bool ref_arity_ok(const TableDecl& t, const std::vector<IndexExpr>& ix) {
  if (t.dims.empty()) {
    if (ix.empty()) return true;
    return ix.size() == 1 && ix[0].kind == IndexExpr::Kind::scalar &&
           ix[0].parts[0].kind == Expr::Kind::number && ix[0].parts[0].number == 1;
  }
  return ix.size() == t.dims.size();
}

}  // namespace detail

/// True when the expression is evaluable at compile time given the index
/// variables in `vars`: literals, bound numeric constants, upb/lwb of bound
/// types, and arithmetic over those.
inline bool is_static_expr(const Expr& e, const std::set<std::string>& vars, const CheckedProgram& cp) {
  switch (e.kind) {
    case Expr::Kind::number: return true;
    case Expr::Kind::name: {
      if (vars.count(e.text)) return true;
      auto it = cp.constants.find(e.text);
      return it != cp.constants.end() && std::holds_alternative<double>(it->second.value);
    }
    case Expr::Kind::bound: return cp.type_bounds.count(e.text) > 0;
    case Expr::Kind::unary_minus: return is_static_expr(e.args[0], vars, cp);
    case Expr::Kind::binary:
      return detail::is_arith(e.op) && is_static_expr(e.args[0], vars, cp) &&
             is_static_expr(e.args[1], vars, cp);
    default: return false;
  }
}

/// Evaluates a static expression. Returns nullopt if it is not static or
/// divides by zero.
inline std::optional<double> eval_static(const Expr& e, const IndexEnv& env, const CheckedProgram& cp) {
  switch (e.kind) {
    case Expr::Kind::number: return e.number;
    case Expr::Kind::name: {
      if (auto it = env.find(e.text); it != env.end()) return static_cast<double>(it->second);
      auto it = cp.constants.find(e.text);
      if (it == cp.constants.end()) return std::nullopt;
      if (auto* d = std::get_if<double>(&it->second.value)) return *d;
      return std::nullopt;
    }
    case Expr::Kind::bound: {
      auto it = cp.type_bounds.find(e.text);
      if (it == cp.type_bounds.end()) return std::nullopt;
      return static_cast<double>(e.upper ? it->second.hi : it->second.lo);
    }
    case Expr::Kind::unary_minus: {
      auto v = eval_static(e.args[0], env, cp);
      if (!v) return std::nullopt;
      return -*v;
    }
    case Expr::Kind::binary: {
      if (!detail::is_arith(e.op)) return std::nullopt;
      auto a = eval_static(e.args[0], env, cp);
      auto b = eval_static(e.args[1], env, cp);
      if (!a || !b) return std::nullopt;
      switch (e.op) {
        case BinOp::add: return *a + *b;
        case BinOp::sub: return *a - *b;
        case BinOp::mul: return *a * *b;
        case BinOp::div:
          if (*b == 0) return std::nullopt;
          return *a / *b;
        default: return std::nullopt;
      }
    }
    default: return std::nullopt;
  }
}

/// Compile-time vs runtime classification of one index position.
inline IndexClass classify_index(const IndexExpr& ix, const std::set<std::string>& vars,
                                 const CheckedProgram& cp) {
  switch (ix.kind) {
    case IndexExpr::Kind::all: return IndexClass::all;
    case IndexExpr::Kind::scalar:
      return is_static_expr(ix.parts[0], vars, cp) ? IndexClass::static_index : IndexClass::runtime_index;
    case IndexExpr::Kind::range:
      return is_static_expr(ix.parts[0], vars, cp) && is_static_expr(ix.parts[1], vars, cp)
                 ? IndexClass::static_range
                 : IndexClass::runtime_range;
  }
  return IndexClass::runtime_index;
}

inline std::set<std::string> equation_vars(const Equation& eq) {
  std::set<std::string> vars;
  for (const auto& s : eq.lhs)
    if (s.kind != IndexSpec::Kind::literal) vars.insert(s.var);
  return vars;
}

/// Concrete index tuples an equation defines. Throws CompileError
/// (NonConstantGuard) if a guard cannot be evaluated at compile time.
inline std::vector<IndexTuple> coverage(const Equation& eq, const CheckedProgram& cp) {
  const TableDecl* t = cp.table(eq.table);
  if (!t) throw CompileError("UnknownName", "unknown table", eq.table, eq.pos);
  auto bounds = cp.dim_bounds(*t);
  if (!bounds) throw CompileError("UnboundHole", "table dimensions are not bound", eq.table, eq.pos);
  if (t->dims.empty()) return {IndexTuple{}};

  std::vector<std::vector<long>> per_dim;
  for (std::size_t d = 0; d < t->dims.size(); ++d) {
    const Bounds& b = (*bounds)[d];
    const IndexSpec& s = eq.lhs[d];
    std::vector<long> vals;
    switch (s.kind) {
      case IndexSpec::Kind::literal: vals.push_back(s.value); break;
      case IndexSpec::Kind::var:
        for (long k = b.lo; k <= b.hi; ++k) vals.push_back(k);
        break;
      case IndexSpec::Kind::guarded: {
        auto g = eval_static(s.guard[0], {}, cp);
        if (!g)
          throw CompileError("NonConstantGuard", "guard is not a compile-time constant", s.var, eq.pos);
        for (long k = b.lo; k <= b.hi; ++k) {
          double v = static_cast<double>(k);
          bool keep = false;
          switch (s.guard_op) {
            case BinOp::gt: keep = v > *g; break;
            case BinOp::lt: keep = v < *g; break;
            case BinOp::ge: keep = v >= *g; break;
            case BinOp::le: keep = v <= *g; break;
            case BinOp::ne: keep = v != *g; break;
            default: break;
          }
          if (keep) vals.push_back(k);
        }
        break;
      }
    }
    per_dim.push_back(std::move(vals));
  }

  std::vector<IndexTuple> out;
  if (per_dim.size() == 1) {
    for (long a : per_dim[0]) out.push_back({a});
  } else {
    for (long a : per_dim[0])
      for (long b : per_dim[1]) out.push_back({a, b});
  }
  return out;
}

/// Binds the equation's index variables to one coverage tuple.
inline IndexEnv bind_tuple(const Equation& eq, const IndexTuple& tuple) {
  IndexEnv env;
  for (std::size_t d = 0; d < tuple.size() && d < eq.lhs.size(); ++d)
    if (eq.lhs[d].kind != IndexSpec::Kind::literal) env[eq.lhs[d].var] = tuple[d];
  return env;
}

namespace detail {

enum class StaticType { number, text, any };

class Checker {
 public:
  Checker(const Program& p, bool require_closed) : require_closed_(require_closed) {
    cp_.program = p;
  }

  CheckedProgram run() {
    declarations();
    const Program& p = cp_.program;
    cp_.coverage.resize(p.equations.size());
    cp_.ref_classes.resize(p.equations.size());
    std::map<std::string, std::map<IndexTuple, std::size_t>> owner;
    for (std::size_t i = 0; i < p.equations.size(); ++i) equation(i, owner);
    if (!errors_.empty()) throw CheckError(std::move(errors_));
    return std::move(cp_);
  }

 private:
  void error(std::string code, std::string message, std::string subject, SourcePos pos) {
    errors_.push_back(Diagnostic{std::move(code), std::move(message), std::move(subject), pos});
  }

  // A constant or type may be declared once open (a hole) and once with a
  // value; the valued declaration fills the hole. Anything more is a
  // duplicate.
  void declarations() {
    Program& p = cp_.program;
    std::set<std::string> open, valued;
    for (const auto& c : p.constants) {
      if (!(c.value ? valued : open).insert(c.name).second)
        error("DuplicateName", "constant declared twice", c.name, c.pos);
      if (c.value) cp_.constants[c.name] = *c.value;
    }
    for (const auto& n : open)
      if (!valued.count(n)) cp_.unbound_constants.insert(n);
    open.clear();
    valued.clear();
    for (const auto& t : p.index_types) {
      if (!(t.bounds ? valued : open).insert(t.name).second)
        error("DuplicateName", "type declared twice", t.name, t.pos);
      if (!t.bounds) continue;
      auto lo = resolve_bound(t.bounds->first, t);
      auto hi = resolve_bound(t.bounds->second, t);
      if (!lo || !hi) continue;
      if (*lo > *hi) {
        error("InvalidBounds", "lower bound exceeds upper bound", t.name, t.pos);
        continue;
      }
      cp_.type_bounds[t.name] = Bounds{*lo, *hi};
    }
    for (const auto& n : open)
      if (!valued.count(n)) cp_.unbound_types.insert(n);
    for (std::size_t i = 0; i < p.tables.size(); ++i) {
      const auto& t = p.tables[i];
      if (!cp_.table_index.emplace(t.name, i).second)
        error("DuplicateName", "table declared twice", t.name, t.pos);
      for (const auto& d : t.dims)
        if (!std::any_of(p.index_types.begin(), p.index_types.end(),
                         [&](const IndexTypeDecl& it) { return it.name == d; }))
          error("UnknownName", "unknown index type in declaration of '" + t.name + "'", d, t.pos);
    }
    if (require_closed_) {
      for (const auto& c : p.constants)
        if (!c.value && cp_.unbound_constants.count(c.name))
          error("UnboundHole", "constant has no value", c.name, c.pos);
      for (const auto& t : p.index_types)
        if (!t.bounds && cp_.unbound_types.count(t.name))
          error("UnboundHole", "index type has no bounds", t.name, t.pos);
    }
  }

  std::optional<long> resolve_bound(const BoundSpec& b, const IndexTypeDecl& t) {
    if (auto* v = std::get_if<long>(&b.value)) return *v;
    const auto& name = std::get<std::string>(b.value);
    auto it = cp_.constants.find(name);
    if (it == cp_.constants.end()) {
      error("UnknownName", "bound of type '" + t.name + "' names no bound constant", name, t.pos);
      return std::nullopt;
    }
    auto* d = std::get_if<double>(&it->second.value);
    if (!d || std::trunc(*d) != *d) {
      error("TypeMismatch", "type bound must be an integer constant", name, t.pos);
      return std::nullopt;
    }
    return static_cast<long>(*d);
  }

  void equation(std::size_t i, std::map<std::string, std::map<IndexTuple, std::size_t>>& owner) {
    const Equation& eq = cp_.program.equations[i];
    std::size_t errors_before = errors_.size();
    const TableDecl* t = cp_.table(eq.table);
    if (!t) {
      error("UnknownName", "equation for undeclared table", eq.table, eq.pos);
      return;
    }
    bool zero_dim_one = t->dims.empty() && eq.lhs.size() == 1 &&
                        eq.lhs[0].kind == IndexSpec::Kind::literal && eq.lhs[0].value == 1;
    if (eq.lhs.size() != t->dims.size() && !zero_dim_one) {
      error("ArityMismatch",
            "table has " + std::to_string(t->dims.size()) + " dimension(s), equation gives " +
                std::to_string(eq.lhs.size()),
            eq.table, eq.pos);
      return;
    }
    if (zero_dim_one) {
      // Normalise `go[1] = ...` to the arity-0 form.
      cp_.program.equations[i].lhs.clear();
    }

    std::set<std::string> vars;
    for (std::size_t d = 0; d < eq.lhs.size(); ++d) {
      const IndexSpec& s = eq.lhs[d];
      if (s.kind != IndexSpec::Kind::literal && !vars.insert(s.var).second)
        error("DuplicateName", "index variable used twice on left-hand side", s.var, eq.pos);
      if (s.kind == IndexSpec::Kind::guarded) {
        if (!is_static_expr(s.guard[0], {}, cp_))
          error("NonConstantGuard", "guard must be a compile-time constant", s.var, eq.pos);
      }
      if (s.kind == IndexSpec::Kind::literal) {
        auto it = cp_.type_bounds.find(t->dims[d]);
        if (it != cp_.type_bounds.end() && (s.value < it->second.lo || s.value > it->second.hi))
          error("IndexOutOfBounds",
                "index " + std::to_string(s.value) + " outside " + t->dims[d] + " (" +
                    std::to_string(it->second.lo) + ":" + std::to_string(it->second.hi) + ")",
                eq.table, eq.pos);
      }
    }

    StaticType rhs_type = resolve(eq.rhs, vars, i);
    if (t->elem_type == ElemType::text && rhs_type == StaticType::number)
      error("TypeMismatch", "number-valued expression assigned to text table", eq.table, eq.pos);
    if (t->elem_type == ElemType::number && rhs_type == StaticType::text)
      error("TypeMismatch", "text-valued expression assigned to number table", eq.table, eq.pos);

    if (errors_.size() != errors_before || !cp_.dim_bounds(*t)) return;

    std::vector<IndexTuple> cov;
    try {
      cov = coverage(cp_.program.equations[i], cp_);
    } catch (const Error& e) {
      errors_.insert(errors_.end(), e.diagnostics().begin(), e.diagnostics().end());
      return;
    }
    auto& claimed = owner[eq.table];
    for (const auto& tuple : cov) {
      auto [it, fresh] = claimed.emplace(tuple, i);
      if (!fresh) {
        error("OverlappingEquations", "element " + tuple_text(tuple) + " defined by two equations",
              eq.table, eq.pos);
        return;
      }
      check_static_bounds(cp_.program.equations[i].rhs, bind_tuple(cp_.program.equations[i], tuple), eq);
      if (errors_.size() != errors_before) return;
    }
    cp_.coverage[i] = std::move(cov);
  }

  static std::string tuple_text(const IndexTuple& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(t[i]);
    }
    return s + "]";
  }

  void check_static_bounds(const Expr& e, const IndexEnv& env, const Equation& eq) {
    for (const auto& a : e.args) check_static_bounds(a, env, eq);
    if (e.kind != Expr::Kind::table_ref) return;
    for (const auto& ix : e.indices)
      for (const auto& part : ix.parts) check_static_bounds(part, env, eq);
    const TableDecl* t = cp_.table(e.text);
    if (!t || t->dims.empty()) return;
    auto bounds = cp_.dim_bounds(*t);
    if (!bounds) return;
    std::set<std::string> vars;
    for (const auto& [k, v] : env) vars.insert(k);
    for (std::size_t d = 0; d < e.indices.size(); ++d) {
      const IndexExpr& ix = e.indices[d];
      if (ix.kind == IndexExpr::Kind::all) continue;
      for (const auto& part : ix.parts) {
        if (!is_static_expr(part, vars, cp_)) continue;
        auto v = eval_static(part, env, cp_);
        const Bounds& b = (*bounds)[d];
        if (!v || std::trunc(*v) != *v || *v < b.lo || *v > b.hi) {
          error("IndexOutOfBounds",
                "index " + (v ? format_number(*v) : std::string("?")) + " outside " + t->dims[d] +
                    " (" + std::to_string(b.lo) + ":" + std::to_string(b.hi) + ") in reference to '" +
                    e.text + "' at " + tuple_text([&] {
                      IndexTuple tt;
                      for (const auto& s : eq.lhs)
                        tt.push_back(s.kind == IndexSpec::Kind::literal ? s.value : env.at(s.var));
                      return tt;
                    }()),
                e.text, e.pos);
          return;
        }
      }
      if (ix.kind == IndexExpr::Kind::range && is_static_expr(ix.parts[0], vars, cp_) &&
          is_static_expr(ix.parts[1], vars, cp_)) {
        auto lo = eval_static(ix.parts[0], env, cp_);
        auto hi = eval_static(ix.parts[1], env, cp_);
        if (lo && hi && *lo > *hi) {
          error("IndexOutOfBounds", "empty static range in reference to '" + e.text + "'", e.text, e.pos);
          return;
        }
      }
    }
  }

  StaticType resolve(const Expr& e, const std::set<std::string>& vars, std::size_t eq_index) {
    switch (e.kind) {
      case Expr::Kind::number: return StaticType::number;
      case Expr::Kind::text: return StaticType::text;
      case Expr::Kind::name: {
        if (vars.count(e.text)) return StaticType::number;
        if (auto it = cp_.constants.find(e.text); it != cp_.constants.end())
          return std::holds_alternative<double>(it->second.value) ? StaticType::number : StaticType::text;
        if (cp_.unbound_constants.count(e.text)) return StaticType::any;
        error("UnknownName", "not an index variable or constant", e.text, e.pos);
        return StaticType::any;
      }
      case Expr::Kind::bound:
        if (!std::any_of(cp_.program.index_types.begin(), cp_.program.index_types.end(),
                         [&](const IndexTypeDecl& t) { return t.name == e.text; }))
          error("UnknownName", "unknown index type", e.text, e.pos);
        return StaticType::number;
      case Expr::Kind::unary_minus:
        if (resolve(e.args[0], vars, eq_index) == StaticType::text)
          error("TypeMismatch", "text used in arithmetic", "-", e.pos);
        return StaticType::number;
      case Expr::Kind::binary: {
        StaticType a = resolve(e.args[0], vars, eq_index);
        StaticType b = resolve(e.args[1], vars, eq_index);
        if (e.op == BinOp::concat) return StaticType::text;
        if (is_comparison(e.op)) return StaticType::number;
        if (a == StaticType::text || b == StaticType::text)
          error("TypeMismatch", "text used in arithmetic", binop_text(e.op), e.pos);
        return StaticType::number;
      }
      case Expr::Kind::call: {
        for (const auto& a : e.args) resolve(a, vars, eq_index);
        if (!known_functions().count(e.text)) {
          error("UnknownName", "unknown function", e.text, e.pos);
          return StaticType::any;
        }
        if (e.text == "if" || e.text == "offset") return StaticType::any;
        return StaticType::number;
      }
      case Expr::Kind::table_ref: {
        RefClassification rc{e.text, {}};
        std::size_t slot = cp_.ref_classes[eq_index].size();
        cp_.ref_classes[eq_index].push_back(rc);
        for (const auto& ix : e.indices)
          for (const auto& part : ix.parts) {
            if (resolve(part, vars, eq_index) == StaticType::text)
              error("TypeMismatch", "text used as an index", e.text, part.pos);
          }
        const TableDecl* t = cp_.table(e.text);
        if (!t) {
          error("UnknownName", "unknown table", e.text, e.pos);
          return StaticType::any;
        }
        if (!ref_arity_ok(*t, e.indices)) {
          error("ArityMismatch",
                "table has " + std::to_string(t->dims.size()) + " dimension(s), reference gives " +
                    std::to_string(e.indices.size()),
                e.text, e.pos);
          return StaticType::any;
        }
        if (!t->dims.empty())
          for (const auto& ix : e.indices)
            cp_.ref_classes[eq_index][slot].dims.push_back(classify_index(ix, vars, cp_));
        // Element types are formatting tags; a reference's value is untyped.
        return StaticType::any;
      }
      case Expr::Kind::cell_ref:
        error("UnknownName", "cell references are not allowed in templates", render_a1(e.cell), e.pos);
        return StaticType::any;
    }
    return StaticType::any;
  }

  CheckedProgram cp_;
  bool require_closed_;
  std::vector<Diagnostic> errors_;
};

}  // namespace detail

/// Resolves names and verifies types, arity, bounds and coverage. With
/// `require_closed`, unbound constants and index types are errors. Throws
/// CheckError carrying every problem found.
inline CheckedProgram check(const Program& program, bool require_closed) {
  return detail::Checker(program, require_closed).run();
}

}  // namespace sheetparts
