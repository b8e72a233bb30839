#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace sheetparts;

TEST(Lexer, CommentsAndStrings) {
  Lexer lx("a. // trailing\n/* block\n */ 'it''s' \"q\"\"q\" 1.5e2 3.x");
  auto toks = lx.tokenize();
  ASSERT_GE(toks.size(), 8u);
  EXPECT_EQ(toks[0].text, "a");
  EXPECT_EQ(toks[2].kind, Tok::atom);
  EXPECT_EQ(toks[2].text, "it's");
  EXPECT_EQ(toks[3].kind, Tok::string);
  EXPECT_EQ(toks[3].text, "q\"q");
  EXPECT_EQ(toks[4].text, "1.5e2");
  EXPECT_EQ(toks[5].text, "3");  // '.' without a digit ends the number
  EXPECT_EQ(lx.comments().size(), 2u);
}

TEST(Lexer, Errors) {
  EXPECT_THROW(Lexer("'open").tokenize(), ParseError);
  EXPECT_THROW(Lexer("/* open").tokenize(), ParseError);
  EXPECT_THROW(Lexer("a # b").tokenize(), ParseError);
}

TEST(Parser, TableDeclarations) {
  Program p = parse_program("table t : a b -> text. table g : -> general. table n : a -> number.");
  ASSERT_EQ(p.tables.size(), 3u);
  EXPECT_EQ(p.tables[0].dims, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(p.tables[0].elem_type, ElemType::text);
  EXPECT_TRUE(p.tables[1].dims.empty());
  EXPECT_EQ(p.tables[2].elem_type, ElemType::number);
}

TEST(Parser, ConstantsAndTypes) {
  Program p = parse_program("constant two = 2. constant pattern. constant s = 'x'. type span = 1:4. type open.");
  ASSERT_EQ(p.constants.size(), 3u);
  EXPECT_EQ(std::get<double>(p.constants[0].value->value), 2);
  EXPECT_FALSE(p.constants[1].value);
  EXPECT_EQ(std::get<std::string>(p.constants[2].value->value), "x");
  ASSERT_EQ(p.index_types.size(), 2u);
  EXPECT_EQ(std::get<long>(p.index_types[0].bounds->second.value), 4);
  EXPECT_FALSE(p.index_types[1].bounds);
}

TEST(Parser, GuardedLhs) {
  Program p = parse_program("t[i > 1] = t[i-1]. u[2, j] = 0. v[k] = k.");
  ASSERT_EQ(p.equations.size(), 3u);
  const auto& g = p.equations[0].lhs[0];
  EXPECT_EQ(g.kind, IndexSpec::Kind::guarded);
  EXPECT_EQ(g.var, "i");
  EXPECT_EQ(g.guard_op, BinOp::gt);
  EXPECT_EQ(p.equations[1].lhs[0].kind, IndexSpec::Kind::literal);
  EXPECT_EQ(p.equations[1].lhs[0].value, 2);
  EXPECT_EQ(p.equations[1].lhs[1].kind, IndexSpec::Kind::var);
}

TEST(Parser, Precedence) {
  Expr e = parse_expression("1 + 2 * 3 & \"a\" = \"7a\"");
  ASSERT_EQ(e.kind, Expr::Kind::binary);
  EXPECT_EQ(e.op, BinOp::eq);
  EXPECT_EQ(e.args[0].op, BinOp::concat);
  EXPECT_EQ(e.args[0].args[0].op, BinOp::add);
  EXPECT_EQ(e.args[0].args[0].args[1].op, BinOp::mul);
  Expr u = parse_expression("-a * b");
  EXPECT_EQ(u.op, BinOp::mul);
  EXPECT_EQ(u.args[0].kind, Expr::Kind::unary_minus);
  Expr l = parse_expression("a - b - c");
  EXPECT_EQ(l.args[0].op, BinOp::sub);  // left associative
}

TEST(Parser, IndexForms) {
  Expr e = parse_expression("t[all, (x+1):upb(b)]");
  ASSERT_EQ(e.kind, Expr::Kind::table_ref);
  ASSERT_EQ(e.indices.size(), 2u);
  EXPECT_EQ(e.indices[0].kind, IndexExpr::Kind::all);
  EXPECT_EQ(e.indices[1].kind, IndexExpr::Kind::range);
  EXPECT_EQ(e.indices[1].parts[1].kind, Expr::Kind::bound);
  EXPECT_TRUE(e.indices[1].parts[1].upper);
  Expr f = parse_expression("MATCH(p, t[all], 0)");
  EXPECT_EQ(f.text, "match");
}

TEST(Parser, Layouts) {
  Program p = parse_program(
      "layout('Spin', rows([skip(1,2)], ['Story', 'Go'], [a as y, as(go, y, ['R'])], heading, [b as yx])).\n"
      "place(t, 'Sheet1', 'A3', x).");
  ASSERT_EQ(p.layouts.size(), 1u);
  const auto& rows = p.layouts[0].rows;
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][0].kind, LayoutItem::Kind::skip);
  EXPECT_EQ(rows[0][0].skip_cols, 2);
  EXPECT_EQ(rows[1][0].kind, LayoutItem::Kind::label);
  EXPECT_EQ(rows[2][1].dropdown, (std::vector<std::string>{"R"}));
  EXPECT_EQ(rows[3][0].kind, LayoutItem::Kind::heading);
  EXPECT_EQ(rows[4][0].orientation, Orientation::yx);
  ASSERT_EQ(p.places.size(), 1u);
  EXPECT_EQ(p.places[0].anchor, "A3");
  EXPECT_EQ(p.places[0].orientation, Orientation::x);
}

TEST(Parser, ErrorsCarryPositions) {
  try {
    parse_program("table t : a -> text.\nt[1] = (1 + .");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos().line, 2);
    EXPECT_GT(e.pos().col, 1);
  }
  EXPECT_THROW(parse_program("type t = 1:."), ParseError);
  EXPECT_THROW(parse_program("t[1] = 1"), ParseError);  // missing full stop
  EXPECT_THROW(parse_program("layout('S', rows([a as q]))."), ParseError);
}

TEST(Parser, DeepNestingIsAnError) {
  std::string deep(500, '(');
  deep += "1" + std::string(500, ')');
  EXPECT_THROW(parse_expression(deep), ParseError);
}

TEST(Parser, FormulaMode) {
  Expr e = parse_formula("SUM(A1,A2:A3,Other!B7)");
  ASSERT_EQ(e.kind, Expr::Kind::call);
  EXPECT_EQ(e.args[0].kind, Expr::Kind::cell_ref);
  EXPECT_TRUE(e.args[1].cell_end.has_value());
  EXPECT_EQ(e.args[2].cell.sheet, "Other");
}

TEST(Parser, DocChunks) {
  Program p = parse_program("// Intro\n// more\n\n// Second\nconstant a = 1. // tail\ntable t : -> general.");
  ASSERT_GE(p.doc_chunks.size(), 3u);
  EXPECT_EQ(p.doc_chunks[0].kind, DocChunk::Kind::prose);
  EXPECT_NE(p.doc_chunks[0].text.find("Intro\nmore"), std::string::npos);
  EXPECT_EQ(p.doc_chunks[1].kind, DocChunk::Kind::code);
  EXPECT_EQ(p.doc_chunks[1].text, "constant a = 1.");
}

TEST(Printer, FormulaRendering) {
  EXPECT_EQ(render_formula(parse_formula("a1 - (b1 - c1)")), "A1-(B1-C1)");
  EXPECT_EQ(render_formula(parse_formula("(a1 - b1) - c1")), "A1-B1-C1");
  EXPECT_EQ(render_formula(parse_formula("if(isna(x1), -1, 2 * (3 + y2))")), "IF(ISNA(X1),-1,2*(3+Y2))");
  EXPECT_EQ(render_formula(parse_formula("\"a\"\"b\" & C1")), "\"a\"\"b\"&C1");
}

TEST(Printer, RoundTripsFixtures) {
  for (const char* id : {"demo", "filter-remove-non-matches", "sf-story"}) {
    Program p = parse_program(support::source_of(id));
    std::string printed = print_program(p);
    Program q = parse_program(printed);
    EXPECT_TRUE(p.same_statements(q)) << id;
    EXPECT_EQ(print_program(q), printed) << id;
  }
}

// Random bytes must never crash the front end: either a Program or a
// ParseError.
TEST(Parser, FuzzNeverCrashes) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "abt[]()=.:,'\"/*-+<>&_ 019\n\tlayoutrowsconstanttypetable";
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    int n = std::uniform_int_distribution<int>(0, 60)(rng);
    for (int k = 0; k < n; ++k) {
      if (rng() % 7 == 0) s += static_cast<char>(rng() % 256);
      else s += alphabet[rng() % alphabet.size()];
    }
    try {
      parse_program(s);
    } catch (const ParseError&) {
    }
  }
}
