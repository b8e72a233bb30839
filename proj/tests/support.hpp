#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "sheetparts/sheetparts.hpp"

namespace support {

namespace fs = std::filesystem;
using namespace sheetparts;

inline const fs::path kTemplates = SHEETPARTS_TEMPLATES;
inline const std::string kCli = SHEETPARTS_CLI;

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline ComponentTemplate load(const std::string& id) { return load_template(kTemplates / id); }

inline std::string source_of(const std::string& id) { return read_file(kTemplates / id / "source.sp"); }

/// Fresh scratch directory per call.
inline fs::path scratch(const std::string& tag) {
  static int counter = 0;
  fs::path p = fs::temp_directory_path() /
               ("sheetparts-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

struct RunResult {
  int status = -1;
  std::string out, err;
};

/// Runs the CLI with arguments (already shell-quoted where needed).
inline RunResult run_cli(const std::string& args) {
  static int n = 0;
  fs::path dir = fs::temp_directory_path();
  std::string tag = std::to_string(::getpid()) + "-" + std::to_string(n++);
  fs::path out = dir / ("sp-out-" + tag), err = dir / ("sp-err-" + tag);
  std::string cmd = "'" + kCli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

/// The worked example input column (nullopt = blank).
inline std::vector<std::optional<std::string>> worked_inputs() {
  return {"Not X", "X", "Not X", "Not X", "X2", "Not X", "Not X", "Not X", std::nullopt, "X4", "X5", "Not X", "Not X"};
}

inline Bindings worked_bindings() {
  return {{"pattern", "X*"}, {"input", "Sheet1!A3:A15"}, {"working", "Sheet1!B3:B15"}, {"output", "Sheet1!C3:C15"}};
}

/// Cell `k` (0-based) of a linear range.
inline CellAddr cell_of(const NormalizedRange& r, long k) {
  CellAddr a = r.anchor;
  if (r.orientation == Orientation::x) a.col += static_cast<int>(k);
  else a.row += static_cast<int>(k);
  return a;
}

struct FilterRun {
  std::vector<Value> index;     // working column
  std::vector<Value> matching;  // output column
};

/// Instantiates the filter, writes `inputs` into the input range and
/// evaluates.
inline FilterRun run_filter(const ComponentTemplate& t, const Bindings& b,
                            const std::vector<std::optional<std::string>>& inputs, std::uint64_t seed = 0) {
  NormalizedBindings nb = validate_params(t, b);
  FormulaGrid grid = instantiate(t, b);
  EvalConfig cfg;
  cfg.rng_seed = seed;
  const auto& in = nb.ranges.at("input");
  for (std::size_t k = 0; k < inputs.size(); ++k)
    if (inputs[k]) cfg.overrides.emplace_back(cell_of(in, static_cast<long>(k)), Value::str(*inputs[k]));
  ValueGrid values = evaluate(grid, cfg);
  FilterRun r;
  const auto& work = nb.ranges.at("working");
  const auto& out = nb.ranges.at("output");
  for (long k = 0; k < out.length; ++k) {
    r.index.push_back(value_at(values, cell_of(work, k)));
    r.matching.push_back(value_at(values, cell_of(out, k)));
  }
  return r;
}

inline std::string range_text(const std::string& sheet, int col, int row, Orientation o, long n) {
  int c2 = o == Orientation::x ? col + static_cast<int>(n) - 1 : col;
  int r2 = o == Orientation::x ? row : row + static_cast<int>(n) - 1;
  return sheet + "!" + render_a1(col, row) + ":" + render_a1(c2, r2);
}

/// Random filter bindings of length n with three non-overlapping ranges.
/// Each range gets its own sheet or its own band of rows/columns.
inline Bindings random_filter_bindings(std::mt19937_64& rng, long n, const std::string& pattern) {
  static const std::array<std::string, 4> sheets = {"Sheet1", "Data", "Work_2", "Out"};
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Bindings b{{"pattern", pattern}};
  const char* names[] = {"input", "working", "output"};
  // Band k of a shared sheet starts at a distinct offset so the ranges stay
  // disjoint whatever their orientation.
  for (int k = 0; k < 3; ++k) {
    std::string sheet = sheets[pick(0, 3)];
    Orientation o = pick(0, 1) ? Orientation::x : Orientation::y;
    int col, row;
    if (o == Orientation::y) {
      col = 1 + k * 7 + pick(0, 5);
      row = 100 * k + 1 + pick(0, 40);
    } else {
      col = 1 + k * 60 + pick(0, 5);
      row = 300 + 10 * k + pick(0, 8);
    }
    b[names[k]] = range_text(sheet, col, row, o, n);
  }
  return b;
}

inline std::string random_pattern(std::mt19937_64& rng) {
  static const std::string atoms = "XYxyab1";
  std::uniform_int_distribution<int> len(1, 4), kind(0, 5), atom(0, static_cast<int>(atoms.size()) - 1);
  std::string p;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    int k = kind(rng);
    if (k == 0) p += '*';
    else if (k == 1) p += '?';
    else p += atoms[atom(rng)];
  }
  return p;
}

inline std::vector<std::optional<std::string>> random_inputs(std::mt19937_64& rng, long n) {
  static const std::string atoms = "XYxyab1";
  std::uniform_int_distribution<int> len(0, 4), atom(0, static_cast<int>(atoms.size()) - 1), blank(0, 6);
  std::vector<std::optional<std::string>> v;
  for (long i = 0; i < n; ++i) {
    if (blank(rng) == 0) {
      v.push_back(std::nullopt);
      continue;
    }
    std::string s;
    int m = len(rng);
    for (int j = 0; j < m; ++j) s += atoms[atom(rng)];
    if (s.empty()) s = "X";
    v.push_back(s);
  }
  return v;
}

inline std::vector<std::string> texts(const std::vector<Value>& vs) {
  std::vector<std::string> out;
  for (const auto& v : vs) out.push_back(v.is_text() ? v.text : "<" + v.display() + ">");
  return out;
}

/// Random formula grid for serialisation round trips. With `typed`,
/// formula cells get random element types (TSV carries none).
inline FormulaGrid random_grid(std::mt19937_64& rng, bool typed) {
  static const std::string chars = "ab|\\\t\n\r\"',=!:; X1-";
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto text = [&] {
    std::string s;
    int n = pick(0, 8);
    for (int i = 0; i < n; ++i) s += chars[pick(0, static_cast<int>(chars.size()) - 1)];
    if (pick(0, 5) == 0) s += "\xc3\xa9";
    return s;
  };
  FormulaGrid g;
  int cells = pick(0, 40);
  const char* sheets[] = {"Sheet1", "B", "zz_9"};
  for (int i = 0; i < cells; ++i) {
    CellAddr a{sheets[pick(0, 2)], pick(1, 60), pick(1, 300)};
    if (pick(0, 20) == 0) a.col = kMaxCols;
    if (pick(0, 20) == 0) a.row = kMaxRows;
    GridCell c;
    switch (pick(0, 3)) {
      case 0: c.content = CellContent::literal_number(pick(0, 1) ? pick(-1000, 1000) : std::ldexp(pick(1, 99999), -pick(0, 20))); break;
      case 1: c.content = CellContent::literal_text(text()); break;
      case 2: {
        ElemType t = typed ? static_cast<ElemType>(pick(0, 2)) : ElemType::general;
        c.content = CellContent::formula("SUM(A1," + text() + ")", t);
        break;
      }
      default: break;  // blank: only meaningful with a dropdown
    }
    if (c.content.kind == CellContent::Kind::blank || pick(0, 4) == 0) {
      std::vector<std::string> opts;
      int n = pick(1, 4);
      for (int k = 0; k < n; ++k) opts.push_back(text());
      c.validation = opts;
    }
    g.set(a, c);
  }
  return g;
}

}  // namespace support
