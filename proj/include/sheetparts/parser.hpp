#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "sheetparts/a1.hpp"
#include "sheetparts/ast.hpp"
#include "sheetparts/lexer.hpp"
#include "sheetparts/number.hpp"

namespace sheetparts {

namespace detail {

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Recursive-descent parser for template programs and compiled formulae.
/// In formula mode identifiers shaped like A1 references become cell
/// references and `Sheet!A1` prefixes are recognised.
class Parser {
 public:
  enum class Mode { program, formula };

  Parser(std::string_view src, Mode mode) : src_(src), mode_(mode) {
    Lexer lexer(src);
    toks_ = lexer.tokenize();
    comments_ = lexer.comments();
  }

  Program program() {
    Program prog;
    struct Span {
      std::size_t begin, end;
    };
    std::vector<Span> spans;
    while (!at(Tok::end)) {
      std::size_t begin = cur().offset;
      statement(prog);
      spans.push_back({begin, toks_[i_ - 1].end});
    }
    build_doc_chunks(prog, spans);
    return prog;
  }

  Expr expression_only() {
    Expr e = expression();
    expect(Tok::end, "end of expression");
    return e;
  }

 private:
  static constexpr int kMaxDepth = 200;

  const Token& cur() const { return toks_[i_]; }
  const Token& peek_tok(std::size_t n = 1) const {
    return toks_[std::min(i_ + n, toks_.size() - 1)];
  }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_ident(std::string_view word) const {
    return cur().kind == Tok::ident && cur().text == word;
  }
  const Token& take() {
    const Token& t = toks_[i_];
    if (t.kind != Tok::end) ++i_;
    return t;
  }
  bool accept(Tok k) {
    if (!at(k)) return false;
    take();
    return true;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    std::string found = at(Tok::end) ? std::string("end of input")
                                     : std::string(tok_name(cur().kind));
    if (cur().kind == Tok::ident || cur().kind == Tok::number) found += " '" + cur().text + "'";
    throw ParseError(cur().pos, "expected " + expected + ", found " + found);
  }

  const Token& expect(Tok k, const std::string& what = {}) {
    if (!at(k)) fail(what.empty() ? tok_name(k) : what);
    return take();
  }

  std::string expect_ident(const std::string& what) { return expect(Tok::ident, what).text; }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) throw ParseError(p.cur().pos, "expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
  };

  // ---- statements --------------------------------------------------------

  void statement(Program& prog) {
    if (at(Tok::ident)) {
      const std::string& w = cur().text;
      Tok next = peek_tok().kind;
      if (w == "constant" && next == Tok::ident) return constant_decl(prog);
      if (w == "type" && next == Tok::ident) return type_decl(prog);
      if (w == "table" && next == Tok::ident) return table_decl(prog);
      if (w == "layout" && next == Tok::lparen) return layout_decl(prog);
      if (w == "place" && next == Tok::lparen) return place_decl(prog);
      return equation(prog);
    }
    fail("statement");
  }

  long integer_literal() {
    bool neg = accept(Tok::minus);
    const Token& t = expect(Tok::number, "integer");
    auto v = parse_number(t.text);
    if (!v || *v != static_cast<double>(static_cast<long>(*v)))
      throw ParseError(t.pos, "expected integer, found '" + t.text + "'");
    return neg ? -static_cast<long>(*v) : static_cast<long>(*v);
  }

  void constant_decl(Program& prog) {
    SourcePos p = take().pos;
    ConstantDecl d;
    d.name = expect_ident("constant name");
    d.pos = p;
    if (accept(Tok::eq)) {
      if (at(Tok::string) || at(Tok::atom)) {
        d.value = Literal{take().text};
      } else {
        bool neg = accept(Tok::minus);
        const Token& t = expect(Tok::number, "number or string literal");
        double v = *parse_number(t.text);
        d.value = Literal{neg ? -v : v};
      }
    }
    expect(Tok::dot, "'.' ending constant declaration");
    prog.constants.push_back(std::move(d));
  }

  BoundSpec bound_spec() {
    if (at(Tok::ident)) return BoundSpec{take().text};
    return BoundSpec{integer_literal()};
  }

  void type_decl(Program& prog) {
    SourcePos p = take().pos;
    IndexTypeDecl d;
    d.name = expect_ident("type name");
    d.pos = p;
    if (accept(Tok::eq)) {
      BoundSpec lo = bound_spec();
      expect(Tok::colon, "':' between type bounds");
      BoundSpec hi = bound_spec();
      d.bounds = std::pair{lo, hi};
    }
    expect(Tok::dot, "'.' ending type declaration");
    prog.index_types.push_back(std::move(d));
  }

  void table_decl(Program& prog) {
    SourcePos p = take().pos;
    TableDecl d;
    d.name = expect_ident("table name");
    d.pos = p;
    expect(Tok::colon, "':' after table name");
    while (at(Tok::ident)) d.dims.push_back(take().text);
    expect(Tok::arrow, "'->' before element type");
    const Token& et = expect(Tok::ident, "element type");
    if (et.text == "general") d.elem_type = ElemType::general;
    else if (et.text == "text") d.elem_type = ElemType::text;
    else if (et.text == "number") d.elem_type = ElemType::number;
    else throw ParseError(et.pos, "unknown element type '" + et.text + "'");
    if (d.dims.size() > 2) throw ParseError(p, "tables have at most two dimensions");
    expect(Tok::dot, "'.' ending table declaration");
    prog.tables.push_back(std::move(d));
  }

  std::string name_or_quoted(const std::string& what) {
    if (at(Tok::atom) || at(Tok::string) || at(Tok::ident)) return take().text;
    fail(what);
  }

  Orientation orientation() {
    const Token& t = expect(Tok::ident, "orientation (y, x or yx)");
    if (t.text == "y") return Orientation::y;
    if (t.text == "x") return Orientation::x;
    if (t.text == "yx") return Orientation::yx;
    throw ParseError(t.pos, "unknown orientation '" + t.text + "'");
  }

  LayoutItem layout_item() {
    LayoutItem item;
    if (at(Tok::atom) || at(Tok::string)) {
      item.kind = LayoutItem::Kind::label;
      item.name = take().text;
      return item;
    }
    if (at_ident("skip") && peek_tok().kind == Tok::lparen) {
      take();
      take();
      item.kind = LayoutItem::Kind::skip;
      item.skip_rows = static_cast<int>(integer_literal());
      expect(Tok::comma);
      item.skip_cols = static_cast<int>(integer_literal());
      expect(Tok::rparen);
      if (item.skip_rows < 0 || item.skip_cols < 0)
        throw ParseError(cur().pos, "skip sizes must be non-negative");
      return item;
    }
    if (at_ident("heading") && peek_tok().kind != Tok::ident) {
      take();
      item.kind = LayoutItem::Kind::heading;
      return item;
    }
    if (at_ident("as") && peek_tok().kind == Tok::lparen) {
      take();
      take();
      item.kind = LayoutItem::Kind::table;
      item.name = expect_ident("table name");
      expect(Tok::comma);
      item.orientation = orientation();
      if (accept(Tok::comma)) {
        expect(Tok::lbracket);
        std::vector<std::string> opts;
        if (!at(Tok::rbracket)) {
          do {
            opts.push_back(name_or_quoted("dropdown option"));
          } while (accept(Tok::comma));
        }
        expect(Tok::rbracket);
        item.dropdown = std::move(opts);
      }
      expect(Tok::rparen);
      return item;
    }
    item.kind = LayoutItem::Kind::table;
    item.name = expect_ident("layout item");
    if (at_ident("as")) {
      take();
      item.orientation = orientation();
    }
    return item;
  }

  void layout_decl(Program& prog) {
    SourcePos p = take().pos;
    expect(Tok::lparen);
    LayoutDirective d;
    d.pos = p;
    d.sheet = name_or_quoted("sheet name");
    expect(Tok::comma);
    if (!at_ident("rows")) fail("'rows'");
    take();
    expect(Tok::lparen);
    if (!at(Tok::rparen)) {
      do {
        if (at_ident("heading")) {
          take();
          LayoutItem h;
          h.kind = LayoutItem::Kind::heading;
          d.rows.push_back({h});
          continue;
        }
        expect(Tok::lbracket, "'[' or 'heading'");
        RowGroup group;
        if (!at(Tok::rbracket)) {
          do {
            group.push_back(layout_item());
          } while (accept(Tok::comma));
        }
        expect(Tok::rbracket);
        d.rows.push_back(std::move(group));
      } while (accept(Tok::comma));
    }
    expect(Tok::rparen);
    expect(Tok::rparen);
    expect(Tok::dot, "'.' ending layout");
    prog.layouts.push_back(std::move(d));
  }

  void place_decl(Program& prog) {
    SourcePos p = take().pos;
    expect(Tok::lparen);
    PlaceDirective d;
    d.pos = p;
    d.table = expect_ident("table name");
    expect(Tok::comma);
    d.sheet = name_or_quoted("sheet name");
    expect(Tok::comma);
    d.anchor = name_or_quoted("anchor cell");
    expect(Tok::comma);
    d.orientation = orientation();
    expect(Tok::rparen);
    expect(Tok::dot, "'.' ending place");
    prog.places.push_back(std::move(d));
  }

  IndexSpec index_spec() {
    IndexSpec s;
    if (at(Tok::number) || at(Tok::minus)) {
      s.kind = IndexSpec::Kind::literal;
      s.value = integer_literal();
      return s;
    }
    s.var = expect_ident("index");
    BinOp op;
    switch (cur().kind) {
      case Tok::gt: op = BinOp::gt; break;
      case Tok::lt: op = BinOp::lt; break;
      case Tok::ge: op = BinOp::ge; break;
      case Tok::le: op = BinOp::le; break;
      case Tok::ne: op = BinOp::ne; break;
      default: s.kind = IndexSpec::Kind::var; return s;
    }
    take();
    s.kind = IndexSpec::Kind::guarded;
    s.guard_op = op;
    s.guard.push_back(concat());
    return s;
  }

  void equation(Program& prog) {
    Equation eq;
    eq.pos = cur().pos;
    eq.table = expect_ident("statement");
    if (accept(Tok::lbracket)) {
      if (!at(Tok::rbracket)) {
        do {
          eq.lhs.push_back(index_spec());
        } while (accept(Tok::comma));
      }
      expect(Tok::rbracket);
    }
    expect(Tok::eq, "'=' in equation");
    eq.rhs = expression();
    expect(Tok::dot, "'.' ending equation");
    prog.equations.push_back(std::move(eq));
  }

  // ---- expressions -------------------------------------------------------

  Expr expression() {
    DepthGuard guard(*this);
    Expr left = concat();
    for (;;) {
      BinOp op;
      switch (cur().kind) {
        case Tok::eq: op = BinOp::eq; break;
        case Tok::ne: op = BinOp::ne; break;
        case Tok::lt: op = BinOp::lt; break;
        case Tok::gt: op = BinOp::gt; break;
        case Tok::le: op = BinOp::le; break;
        case Tok::ge: op = BinOp::ge; break;
        default: return left;
      }
      SourcePos p = take().pos;
      left = Expr::make_binary(op, std::move(left), concat(), p);
    }
  }

  Expr concat() {
    Expr left = additive();
    while (at(Tok::amp)) {
      SourcePos p = take().pos;
      left = Expr::make_binary(BinOp::concat, std::move(left), additive(), p);
    }
    return left;
  }

  Expr additive() {
    Expr left = multiplicative();
    while (at(Tok::plus) || at(Tok::minus)) {
      BinOp op = at(Tok::plus) ? BinOp::add : BinOp::sub;
      SourcePos p = take().pos;
      left = Expr::make_binary(op, std::move(left), multiplicative(), p);
    }
    return left;
  }

  Expr multiplicative() {
    Expr left = unary();
    while (at(Tok::star) || at(Tok::slash)) {
      BinOp op = at(Tok::star) ? BinOp::mul : BinOp::div;
      SourcePos p = take().pos;
      left = Expr::make_binary(op, std::move(left), unary(), p);
    }
    return left;
  }

  Expr unary() {
    DepthGuard guard(*this);
    if (at(Tok::minus)) {
      SourcePos p = take().pos;
      Expr e;
      e.kind = Expr::Kind::unary_minus;
      e.pos = p;
      e.args.push_back(unary());
      return e;
    }
    if (accept(Tok::plus)) return unary();
    return primary();
  }

  std::vector<Expr> call_args() {
    std::vector<Expr> args;
    expect(Tok::lparen);
    if (!at(Tok::rparen)) {
      do {
        args.push_back(expression());
      } while (accept(Tok::comma));
    }
    expect(Tok::rparen, "')' closing argument list");
    return args;
  }

  IndexExpr index_expr() {
    IndexExpr ix;
    if (at_ident("all") && (peek_tok().kind == Tok::rbracket || peek_tok().kind == Tok::comma)) {
      take();
      ix.kind = IndexExpr::Kind::all;
      return ix;
    }
    ix.parts.push_back(expression());
    if (accept(Tok::colon)) {
      ix.kind = IndexExpr::Kind::range;
      ix.parts.push_back(expression());
    }
    return ix;
  }

  /// Cell reference after an optional sheet prefix has been consumed.
  Expr cell_ref(const std::string& sheet, SourcePos p) {
    const Token& t = expect(Tok::ident, "cell reference");
    auto a = parse_a1_position(t.text);
    if (!a) throw ParseError(t.pos, "bad cell reference '" + t.text + "'");
    Expr e = Expr::make_cell(CellAddr{sheet, a->first, a->second});
    e.pos = p;
    if (accept(Tok::colon)) {
      const Token& t2 = expect(Tok::ident, "cell reference after ':'");
      auto b = parse_a1_position(t2.text);
      if (!b) throw ParseError(t2.pos, "bad cell reference '" + t2.text + "'");
      e.cell_end = CellAddr{sheet, b->first, b->second};
    }
    return e;
  }

  Expr primary() {
    const Token& t = cur();
    SourcePos p = t.pos;
    switch (t.kind) {
      case Tok::number: {
        if (mode_ == Mode::formula && peek_tok().kind == Tok::bang) {
          std::string sheet = take().text;
          take();
          return cell_ref(sheet, p);
        }
        auto v = parse_number(t.text);
        if (!v) throw ParseError(p, "bad number '" + t.text + "'");
        take();
        return Expr::make_number(*v, p);
      }
      case Tok::string:
      case Tok::atom: return Expr::make_text(take().text, p);
      case Tok::lparen: {
        take();
        Expr e = expression();
        expect(Tok::rparen, "')'");
        return e;
      }
      case Tok::ident: break;
      default: fail("expression");
    }

    std::string name = take().text;
    if (at(Tok::lparen)) {
      std::string fn = lowercase(name);
      std::vector<Expr> args = call_args();
      if (mode_ == Mode::program && (fn == "upb" || fn == "lwb") && args.size() == 1 &&
          args[0].kind == Expr::Kind::name) {
        Expr e;
        e.kind = Expr::Kind::bound;
        e.upper = fn == "upb";
        e.text = args[0].text;
        e.pos = p;
        return e;
      }
      return Expr::make_call(fn, std::move(args), p);
    }
    if (mode_ == Mode::formula) {
      if (at(Tok::bang)) {
        take();
        return cell_ref(name, p);
      }
      if (parse_a1_position(name)) {
        --i_;
        return cell_ref({}, p);
      }
      return Expr::make_name(name, p);
    }
    if (at(Tok::lbracket)) {
      take();
      Expr e;
      e.kind = Expr::Kind::table_ref;
      e.text = name;
      e.pos = p;
      if (!at(Tok::rbracket)) {
        do {
          e.indices.push_back(index_expr());
        } while (accept(Tok::comma));
      }
      expect(Tok::rbracket, "']' closing table reference");
      return e;
    }
    return Expr::make_name(name, p);
  }

  // ---- literate chunks ---------------------------------------------------

  template <typename Spans>
  void build_doc_chunks(Program& prog, const Spans& spans) {
    std::size_t s = 0;
    std::size_t last_end = 0;
    std::string prose;
    auto flush = [&] {
      if (!prose.empty()) prog.doc_chunks.push_back({DocChunk::Kind::prose, std::move(prose)});
      prose.clear();
    };
    for (const Comment& c : comments_) {
      while (s < spans.size() && spans[s].end <= c.offset) {
        flush();
        prog.doc_chunks.push_back(
            {DocChunk::Kind::code, std::string(src_.substr(spans[s].begin, spans[s].end - spans[s].begin))});
        last_end = spans[s].end;
        ++s;
      }
      if (s < spans.size() && spans[s].begin < c.offset) continue;  // inside a statement
      std::string_view gap = src_.substr(last_end, c.offset - last_end);
      if (!prose.empty()) prose += std::count(gap.begin(), gap.end(), '\n') >= 2 ? "\n\n" : "\n";
      prose += comment_text(c.text);
      last_end = c.end;
    }
    for (; s < spans.size(); ++s) {
      flush();
      prog.doc_chunks.push_back(
          {DocChunk::Kind::code, std::string(src_.substr(spans[s].begin, spans[s].end - spans[s].begin))});
    }
    flush();
  }

  static std::string comment_text(std::string_view raw) {
    std::string out;
    std::size_t start = 0;
    while (start <= raw.size()) {
      auto nl = raw.find('\n', start);
      std::string_view line = raw.substr(start, nl == std::string_view::npos ? raw.npos : nl - start);
      std::string t = trim(line);
      if (!t.empty() && t.front() == '*' && (t.size() == 1 || t[1] == ' ')) t = trim(t.substr(1));
      if (!out.empty() || !t.empty()) {
        if (!out.empty()) out += "\n";
        out += t;
      }
      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
  }

  std::string_view src_;
  Mode mode_;
  std::vector<Token> toks_;
  std::vector<Comment> comments_;
  std::size_t i_ = 0;
  int depth_ = 0;
};

}  // namespace detail

/// Parses template source into a Program. Throws ParseError.
inline Program parse_program(std::string_view source) {
  return detail::Parser(source, detail::Parser::Mode::program).program();
}

/// Parses a template expression (table references, constants, upb/lwb).
inline Expr parse_expression(std::string_view source) {
  return detail::Parser(source, detail::Parser::Mode::program).expression_only();
}

/// Parses compiled formula text (no leading '=') with A1 cell references.
inline Expr parse_formula(std::string_view source) {
  return detail::Parser(source, detail::Parser::Mode::formula).expression_only();
}

}  // namespace sheetparts
