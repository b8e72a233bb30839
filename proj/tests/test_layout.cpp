#include <gtest/gtest.h>

#include "support.hpp"

using namespace sheetparts;

namespace {

std::string code_of(const std::string& src) {
  try {
    resolve_layout(check(parse_program(src), true));
  } catch (const Error& e) {
    return e.diagnostics().front().code;
  }
  return {};
}

}  // namespace

TEST(A1, Rendering) {
  EXPECT_EQ(column_letters(1), "A");
  EXPECT_EQ(column_letters(26), "Z");
  EXPECT_EQ(column_letters(27), "AA");
  EXPECT_EQ(column_letters(702), "ZZ");
  EXPECT_EQ(column_letters(703), "AAA");
  EXPECT_EQ(column_letters(kMaxCols), "XFD");
  EXPECT_EQ(render_qualified(CellAddr{"Other", 2, 3}, "Sheet1"), "Other!B3");
  EXPECT_EQ(render_qualified(CellAddr{"Sheet1", 2, 3}, "Sheet1"), "B3");
}

TEST(A1, RoundTrip) {
  for (int c = 1; c <= 1000; ++c)
    for (int r = 1; r <= 1000; r += (c % 7) + 1) {
      auto p = parse_a1_position(render_a1(c, r));
      ASSERT_TRUE(p);
      ASSERT_EQ(p->first, c);
      ASSERT_EQ(p->second, r);
    }
  EXPECT_EQ(parse_a1_position("xfd1048576"), (std::pair{kMaxCols, kMaxRows}));
  EXPECT_FALSE(parse_a1_position("XFE1"));
  EXPECT_FALSE(parse_a1_position("A0"));
  EXPECT_FALSE(parse_a1_position("A1048577"));
  EXPECT_FALSE(parse_a1_position("1A"));
}

TEST(Layout, DemoPlacement) {
  Compilation c = compile_program(parse_program(support::source_of("demo")));
  const auto& nums = c.placements.at("nums");
  const auto& strings = c.placements.at("strings");
  EXPECT_EQ(render_a1(nums.anchor), "A1");
  EXPECT_EQ(nums.rows, 4);
  EXPECT_EQ(render_a1(strings.anchor), "B1");
  EXPECT_EQ(strings.rows, 4);
}

TEST(Layout, StoryPlacement) {
  auto t = support::load("sf-story");
  Compilation c = instantiate_full(t, {{"story_length", "100"}});
  const auto& text = c.placements.at("story_node_text");
  EXPECT_EQ(text.anchor.sheet, "Spin");
  EXPECT_EQ(render_a1(text.anchor), "A3");
  EXPECT_EQ(text.rows * text.cols, 100);
  EXPECT_EQ(render_a1(addr_of(c.placements, "story_node_text", {99})), "A102");
  const auto& go = c.placements.at("go");
  EXPECT_EQ(render_a1(go.anchor), "B3");
  EXPECT_EQ(go.dropdown, (std::vector<std::string>{"Recalculate"}));
  // skip row 103, heading row 104, tables from row 105.
  EXPECT_EQ(render_a1(c.placements.at("story_node_nos").anchor), "A105");
  EXPECT_EQ(render_a1(c.placements.at("story_out_text").anchor), "E105");
  // second block: skip row 205, heading 206, graph tables from 207.
  EXPECT_EQ(render_a1(c.placements.at("node_nos").anchor), "A207");
  EXPECT_EQ(render_a1(c.placements.at("out_edges").anchor), "B207");
  EXPECT_EQ(c.placements.at("out_edges").cols, 13);
  EXPECT_EQ(render_a1(c.placements.at("out_edge_count").anchor), "O207");
  bool heading = false;
  for (const auto& l : c.placements.labels)
    if (render_a1(l.addr) == "B206" && l.text == "out_edges") heading = true;
  EXPECT_TRUE(heading);
}

TEST(Layout, PlaceDirective) {
  Compilation c = instantiate_full(support::load("filter-remove-non-matches"), support::worked_bindings());
  const auto& m = c.placements.at("matching_elements");
  EXPECT_EQ(render_a1(m.anchor), "C3");
  EXPECT_EQ(render_a1(addr_of(c.placements, "matching_elements", {13})), "C15");
}

TEST(Layout, AddrOf) {
  CheckedProgram cp = check(parse_program("type s = 1:5. table t : s -> general. table u : s -> general."
                                          "place(t, 'S', 'A1', y). place(u, 'S', 'C1', x)."),
                            true);
  PlacementMap pm = resolve_layout(cp);
  EXPECT_EQ(render_a1(addr_of(pm, "t", {5})), "A5");
  EXPECT_EQ(render_a1(addr_of(pm, "u", {5})), "G1");
  EXPECT_EQ(render_a1(addr_of(pm, "u", {2})), "D1");
  EXPECT_THROW(addr_of(pm, "u", {6}), CompileError);
  EXPECT_THROW(addr_of(pm, "u", {0}), CompileError);
}

TEST(Layout, TwoDimensional) {
  CheckedProgram cp = check(parse_program("type a = 0:2. type b = 3:4. table m : a b -> general."
                                          "place(m, 'S', 'B2', yx)."),
                            true);
  PlacementMap pm = resolve_layout(cp);
  EXPECT_EQ(render_a1(addr_of(pm, "m", {0, 3})), "B2");
  EXPECT_EQ(render_a1(addr_of(pm, "m", {2, 4})), "C4");
}

TEST(Layout, Errors) {
  const std::string decl = "type s = 1:3. table t : s -> general. table u : s -> general. t[i] = u[i]. ";
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'A1', y). place(u, 'S', 'A2', x)."), "Overlap");
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'A1', y). layout('S', rows([u]))."), "Overlap");
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'A1', y). place(t, 'S', 'C1', y). place(u, 'S', 'E1', y)."),
            "DuplicatePlacement");
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'A1', y)."), "Unplaced");
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'A1048576', y). place(u, 'S', 'B1', y)."), "OutOfSheet");
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'A1', yx). place(u, 'S', 'B1', y)."), "BadOrientation");
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'A1', y). place(u, 'Bad Name', 'B1', y)."), "BadSheetName");
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'ZZZZ1', y). place(u, 'S', 'B1', y)."), "BadCellRef");
  EXPECT_EQ(code_of(decl + "place(t, 'S', 'A1', y). place(u, 'S', 'B1', y)."), "");
  EXPECT_EQ(code_of(decl + "layout('S', rows([t, skip(1,1)], [u as x]))."), "");
  // A skip occupies its cells.
  EXPECT_EQ(code_of(decl + "layout('S', rows([t, skip(2,2)])). place(u, 'S', 'C2', y)."), "Overlap");
}

TEST(Layout, StackingRules) {
  CheckedProgram cp = check(parse_program("type s = 1:3. type w = 1:2. table a : s -> general. table b : w -> general."
                                          "table c : -> general. table d : s w -> general."
                                          "layout('S', rows(['Title'], [a, b as x, skip(1,1), c], heading, [d, c2]))."
                                          "table c2 : -> general."),
                            true);
  PlacementMap pm = resolve_layout(cp);
  EXPECT_EQ(render_a1(pm.at("a").anchor), "A2");
  EXPECT_EQ(render_a1(pm.at("b").anchor), "B2");
  EXPECT_EQ(render_a1(pm.at("c").anchor), "E2");
  // group height 3 (a), heading at row 5, d at row 6.
  EXPECT_EQ(render_a1(pm.at("d").anchor), "A6");
  EXPECT_EQ(render_a1(pm.at("c2").anchor), "C6");
  std::map<std::string, std::string> labels;
  for (const auto& l : pm.labels) labels[render_a1(l.addr)] = l.text;
  EXPECT_EQ(labels["A1"], "Title");
  EXPECT_EQ(labels["A5"], "d");
  EXPECT_EQ(labels["C5"], "c2");
}
