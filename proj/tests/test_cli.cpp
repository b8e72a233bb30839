#include <gtest/gtest.h>

#include "support.hpp"

using namespace sheetparts;
using support::run_cli;
using support::shell_quote;
namespace fs = std::filesystem;

namespace {

std::string tpl(const std::string& id) { return shell_quote((support::kTemplates / id).string()); }
std::string src(const std::string& id) { return shell_quote((support::kTemplates / id / "source.sp").string()); }

std::string worked_params() {
  std::string out;
  for (const auto& [k, v] : support::worked_bindings()) out += " --param " + shell_quote(k + "=" + v);
  return out;
}

}  // namespace

TEST(Cli, CompileDemo) {
  auto r = run_cli("compile " + src("demo"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 8);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "Demo\tA1\tN\t2");
  auto j = run_cli("compile --format json " + src("demo"));
  ASSERT_EQ(j.status, 0);
  EXPECT_EQ(emit_tsv(parse_json(j.out)), r.out);
}

TEST(Cli, CompileErrors) {
  auto r = run_cli("compile " + src("filter-remove-non-matches"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("UnboundHole 'pattern'"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());

  fs::path dir = support::scratch("cli");
  support::write_file(dir / "bad.sp", "constant a = .\n");
  r = run_cli("compile " + shell_quote((dir / "bad.sp").string()));
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(r.err.rfind("parse: " + (dir / "bad.sp").string() + ":1:", 0), 0u) << r.err;

  EXPECT_EQ(run_cli("compile /nonexistent/x.sp").status, 1);
  EXPECT_EQ(run_cli("compile --format xml " + src("demo")).status, 1);
  EXPECT_EQ(run_cli("frobnicate").status, 1);
  EXPECT_EQ(run_cli("").status, 1);
  fs::remove_all(dir);
}

TEST(Cli, OutputFileOnlyOnSuccess) {
  fs::path dir = support::scratch("cli");
  fs::path out = dir / "out.tsv";
  EXPECT_EQ(run_cli("compile " + src("filter-remove-non-matches") + " -o " + shell_quote(out.string())).status, 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(run_cli("compile " + src("demo") + " -o " + shell_quote(out.string())).status, 0);
  EXPECT_EQ(support::read_file(out), emit_tsv(compile_program(parse_program(support::source_of("demo"))).grid));
  fs::remove_all(dir);
}

TEST(Cli, EvalDemo) {
  fs::path dir = support::scratch("cli");
  fs::path grid = dir / "demo.tsv";
  ASSERT_EQ(run_cli("compile " + src("demo") + " -o " + shell_quote(grid.string())).status, 0);
  auto r = run_cli("eval " + shell_quote(grid.string()));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out,
            "2,\"Two = 2.\"\n"
            "4,\"Twice two = 4.\"\n"
            "14,\"Length of above text = 14.\"\n"
            "620,\"Sum of above numbers plus 600 = 620.\"\n");
  auto s = run_cli("eval " + shell_quote(grid.string()) + " --set Demo!A1=3");
  EXPECT_NE(s.out.find("\n6,"), std::string::npos) << s.out;
  auto j = run_cli("eval --out json " + shell_quote(grid.string()));
  EXPECT_EQ(nlohmann::json::parse(j.out)["sheets"][0]["cells"][0]["value"], 2);
  EXPECT_EQ(run_cli("eval " + shell_quote(grid.string()) + " --set A1=3").status, 1);
  EXPECT_EQ(run_cli("eval " + shell_quote(grid.string()) + " --out xls").status, 1);

  support::write_file(dir / "bad.tsv", "S\tA1\tQ\tx\n");
  auto bad = run_cli("eval " + shell_quote((dir / "bad.tsv").string()));
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.err.find("FormatError"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, EvalDeterministicWithSeed) {
  fs::path dir = support::scratch("cli");
  fs::path grid = dir / "story.tsv";
  ASSERT_EQ(run_cli("instantiate " + tpl("sf-story") + " --param story_length=40 -o " + shell_quote(grid.string())).status, 0);
  auto a = run_cli("eval --seed 5 " + shell_quote(grid.string()));
  auto b = run_cli("eval --seed 5 " + shell_quote(grid.string()));
  auto c = run_cli("eval --seed 6 " + shell_quote(grid.string()));
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  fs::remove_all(dir);
}

TEST(Cli, Instantiate) {
  auto r = run_cli("instantiate " + tpl("filter-remove-non-matches") + worked_params());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, instantiate_to_text(support::load("filter-remove-non-matches"), support::worked_bindings(),
                                       GridFormat::tsv));

  fs::path dir = support::scratch("cli");
  nlohmann::json flat = support::worked_bindings();
  support::write_file(dir / "flat.json", flat.dump());
  support::write_file(dir / "wrapped.json", nlohmann::json{{"bindings", flat}}.dump());
  EXPECT_EQ(run_cli("instantiate " + tpl("filter-remove-non-matches") + " --params-file " +
                    shell_quote((dir / "flat.json").string())).out,
            r.out);
  EXPECT_EQ(run_cli("instantiate " + tpl("filter-remove-non-matches") + " --params-file " +
                    shell_quote((dir / "wrapped.json").string())).out,
            r.out);
  fs::remove_all(dir);
}

TEST(Cli, InstantiateErrors) {
  auto r = run_cli("instantiate " + tpl("filter-remove-non-matches") + " --param input=Sheet1!A3:A15");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("validate: MissingParam 'pattern': required parameter not given"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("validate: MissingParam 'output'"), std::string::npos) << r.err;

  r = run_cli("instantiate " + tpl("filter-remove-non-matches") + worked_params() + " --param output=C3:C9");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("LengthMismatch 'output'"), std::string::npos);

  r = run_cli("instantiate " + tpl("filter-remove-non-matches") + worked_params() + " --param input=Sheet1!3A");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("BadCellRef 'input'"), std::string::npos);

  // Overlapping ranges pass validation but fail layout.
  r = run_cli("instantiate " + tpl("filter-remove-non-matches") + worked_params() + " --param output=A3:A15");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("layout: Overlap"), std::string::npos) << r.err;

  EXPECT_EQ(run_cli("instantiate /nonexistent").status, 1);
  EXPECT_EQ(run_cli("instantiate " + tpl("demo") + " --param nonsense").status, 1);
}

TEST(Cli, Doc) {
  auto r = run_cli("doc " + src("sf-story") + " --title Story");
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("<title>Story</title>"), std::string::npos);
  EXPECT_NE(r.out.find("<pre class=\"code\">"), std::string::npos);
  auto d = run_cli("doc " + src("demo"));
  EXPECT_NE(d.out.find("<title>source</title>"), std::string::npos);
}

TEST(Cli, ServeNeedsTemplates) {
  auto r = run_cli("serve --templates /nonexistent/dir --port 1");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("not found"), std::string::npos);
}
