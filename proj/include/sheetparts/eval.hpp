#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sheetparts/a1.hpp"
#include "sheetparts/ast.hpp"
#include "sheetparts/error.hpp"
#include "sheetparts/grid.hpp"
#include "sheetparts/parser.hpp"
#include "sheetparts/value.hpp"

namespace sheetparts {

using ValueGrid = std::map<CellAddr, Value, RowMajorLess>;

struct EvalConfig {
  std::uint64_t rng_seed = 0;
  /// Fixed cell values applied before evaluation; they replace whatever the
  /// grid holds at those addresses.
  std::vector<std::pair<CellAddr, Value>> overrides;
  /// Order among independent cells. Results must not depend on it for grids
  /// without RAND().
  enum class TieBreak { row_major, reverse_row_major } tie_break = TieBreak::row_major;
};

/// Case-insensitive spreadsheet wildcard match: '*' is any run, '?' one
/// character. The whole text must match.
inline bool wildcard_match(std::string_view pattern, std::string_view text) {
  auto fold = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  std::size_t p = 0, t = 0;
  std::size_t star = std::string_view::npos, resume = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || (pattern[p] != '*' && fold(pattern[p]) == fold(text[t])))) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      resume = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++resume;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

/// Seeded uniform generator in [0,1): 53 high bits of a 64-bit Mersenne
/// Twister. The stream is fixed so golden tests stay stable.
class UnitRandom {
 public:
  explicit UnitRandom(std::uint64_t seed) : gen_(seed) {}
  double next() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 gen_;
};

namespace detail {

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

inline std::string fold_case(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Either a plain value or a reference to a rectangle of cells.
struct Operand {
  bool is_ref = false;
  Rect ref;
  Value value;

  static Operand of(Value v) { return {false, {}, std::move(v)}; }
  static Operand of_ref(Rect r) { return {true, std::move(r), {}}; }
};

class Evaluator {
 public:
  Evaluator(const FormulaGrid& grid, const EvalConfig& cfg) : grid_(grid), cfg_(cfg), rng_(cfg.rng_seed) {}

  ValueGrid run() {
    for (const auto& [a, v] : cfg_.overrides) {
      values_[a] = v;
      state_[a] = State::done;
    }
    for (const auto& [a, c] : grid_.cells()) {
      if (c.content.kind != CellContent::Kind::formula || state_.count(a)) continue;
      try {
        formulas_.emplace(a, parse_formula(c.content.text));
      } catch (const ParseError& e) {
        throw Error(Stage::eval, {Diagnostic{"BadFormula", e.what(), a.sheet + "!" + render_a1(a), {}}});
      }
    }
    build_graph();
    mark_cycles();
    for (const CellAddr& a : order()) get(a);
    for (const auto& [a, c] : grid_.cells()) get(a);
    return std::move(values_);
  }

 private:
  enum class State { in_progress, done };

  // ---- dependency graph --------------------------------------------------

  void collect_deps(const Expr& e, const std::string& sheet, std::set<CellAddr, RowMajorLess>& out) const {
    if (e.kind == Expr::Kind::cell_ref) {
      std::string s = e.cell.sheet.empty() ? sheet : e.cell.sheet;
      CellAddr last = e.cell_end.value_or(e.cell);
      int r0 = std::min(e.cell.row, last.row), r1 = std::max(e.cell.row, last.row);
      int c0 = std::min(e.cell.col, last.col), c1 = std::max(e.cell.col, last.col);
      for (int r = r0; r <= r1; ++r) {
        auto it = grid_.cells().lower_bound(CellAddr{s, c0, r});
        for (; it != grid_.cells().end() && it->first.sheet == s && it->first.row == r && it->first.col <= c1; ++it)
          out.insert(it->first);
      }
    }
    for (const auto& a : e.args) collect_deps(a, sheet, out);
  }

  void build_graph() {
    for (const auto& [a, f] : formulas_) {
      std::set<CellAddr, RowMajorLess> deps;
      collect_deps(f, a.sheet, deps);
      auto& out = deps_[a];
      for (const auto& d : deps)
        if (formulas_.count(d)) out.push_back(d);
    }
  }

  // Tarjan's strongly connected components; members of non-trivial
  // components (or self-loops) are cyclic.
  void mark_cycles() {
    std::map<CellAddr, int, RowMajorLess> index, low;
    std::set<CellAddr, RowMajorLess> on_stack;
    std::vector<CellAddr> stack;
    int counter = 0;
    std::function<void(const CellAddr&)> visit = [&](const CellAddr& v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack.insert(v);
      for (const auto& w : deps_[v]) {
        if (!index.count(w)) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack.count(w)) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        std::vector<CellAddr> comp;
        CellAddr w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack.erase(w);
          comp.push_back(w);
        } while (!(w == v));
        bool self_loop = std::find(deps_[v].begin(), deps_[v].end(), v) != deps_[v].end();
        if (comp.size() > 1 || self_loop)
          for (const auto& c : comp) {
            values_[c] = Value::err(ErrorKind::cycle);
            state_[c] = State::done;
          }
      }
    };
    for (const auto& [a, f] : formulas_)
      if (!index.count(a)) visit(a);
  }

  std::vector<CellAddr> order() {
    bool reverse = cfg_.tie_break == EvalConfig::TieBreak::reverse_row_major;
    auto cmp = [reverse](const CellAddr& a, const CellAddr& b) {
      return reverse ? row_major_less(a, b) : row_major_less(b, a);
    };
    std::map<CellAddr, int, RowMajorLess> indegree;
    std::map<CellAddr, std::vector<CellAddr>, RowMajorLess> users;
    for (const auto& [a, f] : formulas_) {
      if (state_.count(a)) continue;
      indegree[a];
      for (const auto& d : deps_[a]) {
        if (state_.count(d)) continue;
        ++indegree[a];
        users[d].push_back(a);
      }
    }
    std::priority_queue<CellAddr, std::vector<CellAddr>, decltype(cmp)> ready(cmp);
    for (const auto& [a, n] : indegree)
      if (n == 0) ready.push(a);
    std::vector<CellAddr> out;
    while (!ready.empty()) {
      CellAddr a = ready.top();
      ready.pop();
      out.push_back(a);
      for (const auto& u : users[a])
        if (--indegree[u] == 0) ready.push(u);
    }
    return out;
  }

  // ---- cell access -------------------------------------------------------

  Value get(const CellAddr& a) {
    if (auto it = state_.find(a); it != state_.end()) {
      if (it->second == State::in_progress) return Value::err(ErrorKind::cycle);
      return values_[a];
    }
    const GridCell* cell = grid_.find(a);
    if (!cell) return Value::blank();
    state_[a] = State::in_progress;
    Value v;
    switch (cell->content.kind) {
      case CellContent::Kind::blank: v = Value::blank(); break;
      case CellContent::Kind::number: v = Value::num(cell->content.number); break;
      case CellContent::Kind::text: v = Value::str(cell->content.text); break;
      case CellContent::Kind::formula: {
        v = scalar(eval(formulas_.at(a), a.sheet));
        if (v.is_blank()) v = Value::num(0);
        break;
      }
    }
    values_[a] = v;
    state_[a] = State::done;
    return v;
  }

  Value scalar(const Operand& o) {
    if (!o.is_ref) return o.value;
    if (o.ref.rows != 1 || o.ref.cols != 1) return Value::err(ErrorKind::value);
    return get(CellAddr{o.ref.sheet, o.ref.col, o.ref.row});
  }

  template <typename F>
  void for_each_cell(const Rect& r, F&& f) {
    for (int row = r.row; row <= r.last_row(); ++row)
      for (int col = r.col; col <= r.last_col(); ++col) f(get(CellAddr{r.sheet, col, row}));
  }

  // ---- coercions ---------------------------------------------------------

  static Value to_number(const Value& v) {
    switch (v.kind) {
      case Value::Kind::number: return v;
      case Value::Kind::blank: return Value::num(0);
      case Value::Kind::error: return v;
      case Value::Kind::text: {
        if (auto d = parse_number(trim(v.text))) return Value::num(*d);
        return Value::err(ErrorKind::value);
      }
    }
    return Value::err(ErrorKind::value);
  }

  /// Truth value as number 1/0, or an error.
  static Value to_bool(const Value& v) {
    switch (v.kind) {
      case Value::Kind::number: return Value::boolean(v.number != 0);
      case Value::Kind::blank: return Value::boolean(false);
      case Value::Kind::error: return v;
      case Value::Kind::text: return Value::err(ErrorKind::value);
    }
    return Value::err(ErrorKind::value);
  }

  /// Spreadsheet ordering: numbers < text; text case-insensitive; blank
  /// takes the other side's zero value.
  static int compare(const Value& a0, const Value& b0) {
    Value a = a0, b = b0;
    if (a.is_blank() && b.is_blank()) return 0;
    if (a.is_blank()) a = b.is_text() ? Value::str("") : Value::num(0);
    if (b.is_blank()) b = a.is_text() ? Value::str("") : Value::num(0);
    if (a.is_number() && b.is_number()) return a.number < b.number ? -1 : (a.number > b.number ? 1 : 0);
    if (a.is_number()) return -1;
    if (b.is_number()) return 1;
    std::string x = fold_case(a.text), y = fold_case(b.text);
    return x < y ? -1 : (x > y ? 1 : 0);
  }

  // ---- expressions -------------------------------------------------------

  Operand eval(const Expr& e, const std::string& sheet) {
    switch (e.kind) {
      case Expr::Kind::number: return Operand::of(Value::num(e.number));
      case Expr::Kind::text: return Operand::of(Value::str(e.text));
      case Expr::Kind::cell_ref: {
        std::string s = e.cell.sheet.empty() ? sheet : e.cell.sheet;
        CellAddr last = e.cell_end.value_or(e.cell);
        int r0 = std::min(e.cell.row, last.row), r1 = std::max(e.cell.row, last.row);
        int c0 = std::min(e.cell.col, last.col), c1 = std::max(e.cell.col, last.col);
        return Operand::of_ref(Rect{s, r0, c0, r1 - r0 + 1, c1 - c0 + 1});
      }
      case Expr::Kind::unary_minus: {
        Value v = to_number(scalar(eval(e.args[0], sheet)));
        if (v.is_error()) return Operand::of(v);
        return Operand::of(Value::num(-v.number));
      }
      case Expr::Kind::binary: return Operand::of(binary(e, sheet));
      case Expr::Kind::call: return call(e, sheet);
      default: return Operand::of(Value::err(ErrorKind::name));
    }
  }

  Value binary(const Expr& e, const std::string& sheet) {
    Value a = scalar(eval(e.args[0], sheet));
    Value b = scalar(eval(e.args[1], sheet));
    if (a.is_error()) return a;
    if (b.is_error()) return b;
    switch (e.op) {
      case BinOp::concat: return Value::str(a.display() + b.display());
      case BinOp::eq: return Value::boolean(compare(a, b) == 0);
      case BinOp::ne: return Value::boolean(compare(a, b) != 0);
      case BinOp::lt: return Value::boolean(compare(a, b) < 0);
      case BinOp::gt: return Value::boolean(compare(a, b) > 0);
      case BinOp::le: return Value::boolean(compare(a, b) <= 0);
      case BinOp::ge: return Value::boolean(compare(a, b) >= 0);
      default: break;
    }
    Value x = to_number(a), y = to_number(b);
    if (x.is_error()) return x;
    if (y.is_error()) return y;
    switch (e.op) {
      case BinOp::add: return Value::num(x.number + y.number);
      case BinOp::sub: return Value::num(x.number - y.number);
      case BinOp::mul: return Value::num(x.number * y.number);
      case BinOp::div:
        if (y.number == 0) return Value::err(ErrorKind::div0);
        return Value::num(x.number / y.number);
      default: return Value::err(ErrorKind::value);
    }
  }

  Operand call(const Expr& e, const std::string& sheet) {
    const std::string& fn = e.text;
    const auto& args = e.args;
    auto arg = [&](std::size_t i) { return scalar(eval(args[i], sheet)); };
    auto bad = [] { return Operand::of(Value::err(ErrorKind::value)); };

    if (fn == "if") {
      if (args.size() < 2 || args.size() > 3) return bad();
      Value c = to_bool(arg(0));
      if (c.is_error()) return Operand::of(c);
      if (c.number != 0) return eval(args[1], sheet);
      if (args.size() == 3) return eval(args[2], sheet);
      return Operand::of(Value::boolean(false));
    }
    if (fn == "isna" || fn == "iserror") {
      if (args.size() != 1) return bad();
      Value v = arg(0);
      bool hit = fn == "isna" ? (v.is_error() && v.error == ErrorKind::na) : v.is_error();
      return Operand::of(Value::boolean(hit));
    }
    if (fn == "match") return Operand::of(match(e, sheet));
    if (fn == "offset") return offset(e, sheet);
    if (fn == "rand") {
      if (!args.empty()) return bad();
      return Operand::of(Value::num(rng_.next()));
    }
    if (fn == "floor") {
      if (args.empty() || args.size() > 2) return bad();
      Value x = to_number(arg(0));
      Value s = args.size() == 2 ? to_number(arg(1)) : Value::num(1);
      if (x.is_error()) return Operand::of(x);
      if (s.is_error()) return Operand::of(s);
      if (s.number == 0) return Operand::of(Value::err(ErrorKind::div0));
      if (x.number > 0 && s.number < 0) return bad();
      return Operand::of(Value::num(std::floor(x.number / s.number) * s.number));
    }
    if (fn == "len") {
      if (args.size() != 1) return bad();
      Value v = arg(0);
      if (v.is_error()) return Operand::of(v);
      return Operand::of(Value::num(static_cast<double>(utf8_length(v.display()))));
    }
    if (fn == "sum" || fn == "count") {
      bool counting = fn == "count";
      double acc = 0;
      for (const auto& a : args) {
        Operand o = eval(a, sheet);
        if (o.is_ref) {
          Value failure;
          for_each_cell(o.ref, [&](const Value& v) {
            if (v.is_number()) acc += counting ? 1 : v.number;
            else if (v.is_error() && !counting && !failure.is_error()) failure = v;
          });
          if (failure.is_error()) return Operand::of(failure);
          continue;
        }
        if (counting) {
          if (o.value.is_number()) acc += 1;
          continue;
        }
        Value v = to_number(o.value);
        if (v.is_error()) return Operand::of(v);
        acc += v.number;
      }
      return Operand::of(Value::num(acc));
    }
    if (fn == "and" || fn == "or") {
      bool is_and = fn == "and";
      bool acc = is_and;
      bool seen = false;
      for (const auto& a : args) {
        Operand o = eval(a, sheet);
        std::vector<Value> vals;
        if (o.is_ref) {
          for_each_cell(o.ref, [&](const Value& v) {
            if (v.is_number() || v.is_error()) vals.push_back(v);
          });
        } else {
          vals.push_back(to_bool(o.value));
        }
        for (const auto& v : vals) {
          if (v.is_error()) return Operand::of(v);
          seen = true;
          acc = is_and ? (acc && v.number != 0) : (acc || v.number != 0);
        }
      }
      if (!seen) return bad();
      return Operand::of(Value::boolean(acc));
    }
    if (fn == "not") {
      if (args.size() != 1) return bad();
      Value v = to_bool(arg(0));
      if (v.is_error()) return Operand::of(v);
      return Operand::of(Value::boolean(v.number == 0));
    }
    return Operand::of(Value::err(ErrorKind::name));
  }

  Value match(const Expr& e, const std::string& sheet) {
    const auto& args = e.args;
    if (args.size() != 3) return Value::err(ErrorKind::value);
    Value needle = scalar(eval(args[0], sheet));
    if (needle.is_error()) return needle;
    Operand hay = eval(args[1], sheet);
    Value type = to_number(scalar(eval(args[2], sheet)));
    if (type.is_error()) return type;
    if (type.number != 0) return Value::err(ErrorKind::value);
    if (!hay.is_ref || (hay.ref.rows != 1 && hay.ref.cols != 1)) return Value::err(ErrorKind::na);
    if (needle.is_blank() || (needle.is_text() && needle.text.empty())) return Value::err(ErrorKind::na);
    int pos = 0;
    int found = 0;
    for_each_cell(hay.ref, [&](const Value& v) {
      ++pos;
      if (found) return;
      if (needle.is_text() && v.is_text() && wildcard_match(needle.text, v.text)) found = pos;
      if (needle.is_number() && v.is_number() && v.number == needle.number) found = pos;
    });
    if (!found) return Value::err(ErrorKind::na);
    return Value::num(found);
  }

  Operand offset(const Expr& e, const std::string& sheet) {
    const auto& args = e.args;
    if (args.size() < 3 || args.size() > 5) return Operand::of(Value::err(ErrorKind::value));
    Operand base = eval(args[0], sheet);
    if (!base.is_ref) return Operand::of(Value::err(ErrorKind::value));
    long n[4] = {0, 0, base.ref.rows, base.ref.cols};
    for (std::size_t i = 1; i < args.size(); ++i) {
      Value v = to_number(scalar(eval(args[i], sheet)));
      if (v.is_error()) return Operand::of(v);
      n[i - 1] = static_cast<long>(std::trunc(v.number));
    }
    long row = base.ref.row + n[0], col = base.ref.col + n[1];
    long rows = n[2], cols = n[3];
    if (rows < 1 || cols < 1 || row < 1 || col < 1 || row + rows - 1 > kMaxRows || col + cols - 1 > kMaxCols)
      return Operand::of(Value::err(ErrorKind::ref));
    return Operand::of_ref(Rect{base.ref.sheet, static_cast<int>(row), static_cast<int>(col),
                                static_cast<int>(rows), static_cast<int>(cols)});
  }

  const FormulaGrid& grid_;
  const EvalConfig& cfg_;
  UnitRandom rng_;
  std::map<CellAddr, Expr, RowMajorLess> formulas_;
  std::map<CellAddr, std::vector<CellAddr>, RowMajorLess> deps_;
  std::map<CellAddr, State, RowMajorLess> state_;
  ValueGrid values_;
};

}  // namespace detail

/// Evaluates every cell of the grid once. Cells on a static reference cycle
/// become #CYCLE!; OFFSET targets are evaluated on demand. Throws Error
/// (stage eval) if a formula does not parse.
inline ValueGrid evaluate(const FormulaGrid& grid, const EvalConfig& cfg = {}) {
  return detail::Evaluator(grid, cfg).run();
}

/// Value at `a`, Blank when absent.
inline Value value_at(const ValueGrid& g, const CellAddr& a) {
  auto it = g.find(a);
  return it == g.end() ? Value::blank() : it->second;
}

}  // namespace sheetparts
