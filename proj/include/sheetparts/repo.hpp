#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheetparts/a1.hpp"
#include "sheetparts/codegen.hpp"
#include "sheetparts/emit.hpp"
#include "sheetparts/error.hpp"
#include "sheetparts/parser.hpp"
#include "sheetparts/printer.hpp"

namespace sheetparts {

// ---- manifest --------------------------------------------------------------

enum class ParamKind { constant_text, constant_number, cell_range, sheet_name };

inline const char* param_kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::constant_text: return "constant-text";
    case ParamKind::constant_number: return "constant-number";
    case ParamKind::cell_range: return "cell-range";
    case ParamKind::sheet_name: return "sheet-name";
  }
  return "constant-text";
}

/// One hole a parameter fills.
struct ParamBinding {
  enum class Kind { constant, index_type, table };
  Kind kind = Kind::constant;
  std::string target;
  long lwb = 1;  // index_type: lower bound of the synthesized type
};

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::constant_text;
  std::string label;
  bool required = true;
  std::vector<ParamBinding> binds;
  std::vector<std::string> same_length_as;
  // Optional cell-range default: the shape of another range moved to the
  // sheet named by another parameter.
  std::string default_anchor_from;
  std::string default_sheet_param;
};

struct Manifest {
  std::vector<ParamSpec> params;

  const ParamSpec* find(const std::string& name) const {
    for (const auto& p : params)
      if (p.name == name) return &p;
    return nullptr;
  }
};

inline Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  if (j.value("version", 1) != 1) throw FormatError(0, "unsupported manifest version");
  for (const auto& pj : j.at("params")) {
    ParamSpec p;
    p.name = pj.at("name").get<std::string>();
    std::string kind = pj.at("kind").get<std::string>();
    if (kind == "constant-text") p.kind = ParamKind::constant_text;
    else if (kind == "constant-number") p.kind = ParamKind::constant_number;
    else if (kind == "cell-range") p.kind = ParamKind::cell_range;
    else if (kind == "sheet-name") p.kind = ParamKind::sheet_name;
    else throw FormatError(0, "unknown parameter kind '" + kind + "'");
    p.label = pj.value("label", p.name);
    p.required = pj.value("required", true);
    for (const auto& bj : pj.value("binds", nlohmann::json::array())) {
      ParamBinding b;
      if (bj.contains("constant")) {
        b.kind = ParamBinding::Kind::constant;
        b.target = bj.at("constant").get<std::string>();
      } else if (bj.contains("index_type")) {
        b.kind = ParamBinding::Kind::index_type;
        b.target = bj.at("index_type").get<std::string>();
        b.lwb = bj.value("lwb", 1L);
      } else if (bj.contains("table")) {
        b.kind = ParamBinding::Kind::table;
        b.target = bj.at("table").get<std::string>();
      } else {
        throw FormatError(0, "binding of '" + p.name + "' names no hole");
      }
      p.binds.push_back(std::move(b));
    }
    for (const auto& cj : pj.value("constraints", nlohmann::json::array()))
      if (cj.contains("same_length_as")) p.same_length_as.push_back(cj.at("same_length_as").get<std::string>());
    if (pj.contains("default")) {
      p.default_anchor_from = pj.at("default").value("anchor_from", std::string{});
      p.default_sheet_param = pj.at("default").value("sheet_param", std::string{});
    }
    m.params.push_back(std::move(p));
  }
  return m;
}

inline nlohmann::ordered_json manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  for (const auto& p : m.params) {
    nlohmann::ordered_json pj;
    pj["name"] = p.name;
    pj["kind"] = param_kind_name(p.kind);
    pj["label"] = p.label;
    pj["required"] = p.required;
    nlohmann::ordered_json binds = nlohmann::ordered_json::array();
    for (const auto& b : p.binds) {
      switch (b.kind) {
        case ParamBinding::Kind::constant: binds.push_back({{"constant", b.target}}); break;
        case ParamBinding::Kind::index_type: binds.push_back({{"index_type", b.target}, {"lwb", b.lwb}}); break;
        case ParamBinding::Kind::table: binds.push_back({{"table", b.target}}); break;
      }
    }
    pj["binds"] = std::move(binds);
    if (!p.same_length_as.empty()) {
      nlohmann::ordered_json cs = nlohmann::ordered_json::array();
      for (const auto& s : p.same_length_as) cs.push_back({{"same_length_as", s}});
      pj["constraints"] = std::move(cs);
    }
    if (!p.default_anchor_from.empty())
      pj["default"] = {{"anchor_from", p.default_anchor_from}, {"sheet_param", p.default_sheet_param}};
    params.push_back(std::move(pj));
  }
  return {{"version", 1}, {"params", std::move(params)}};
}

// ---- templates ---------------------------------------------------------------

using Bindings = std::map<std::string, std::string>;

struct ComponentTemplate {
  std::string id;
  std::string title;
  std::string summary;
  std::string source;
  Manifest manifest;
  Bindings example_bindings;
  /// Sample input cell values ("Sheet!A1" -> text) for demonstration grids.
  std::map<std::string, std::string> example_inputs;
};

inline bool valid_component_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

/// Holes of a template: unbound constants, unbound index types, and tables
/// no layout directive places.
struct Holes {
  std::set<std::string> constants, index_types, tables;
};

inline Holes find_holes(const Program& p) {
  Holes h;
  std::set<std::string> valued;
  for (const auto& c : p.constants)
    if (c.value) valued.insert(c.name);
  for (const auto& c : p.constants)
    if (!c.value && !valued.count(c.name)) h.constants.insert(c.name);
  valued.clear();
  for (const auto& t : p.index_types)
    if (t.bounds) valued.insert(t.name);
  for (const auto& t : p.index_types)
    if (!t.bounds && !valued.count(t.name)) h.index_types.insert(t.name);
  std::set<std::string> placed;
  for (const auto& l : p.layouts)
    for (const auto& g : l.rows)
      for (const auto& item : g)
        if (item.kind == LayoutItem::Kind::table) placed.insert(item.name);
  for (const auto& pl : p.places) placed.insert(pl.table);
  for (const auto& t : p.tables)
    if (!placed.count(t.name)) h.tables.insert(t.name);
  return h;
}

/// Checks that the manifest's bindings cover exactly the source's holes.
inline void verify_manifest(const ComponentTemplate& t) {
  Holes holes = find_holes(parse_program(t.source));
  Holes bound;
  std::vector<Diagnostic> errs;
  for (const auto& p : t.manifest.params)
    for (const auto& b : p.binds) {
      switch (b.kind) {
        case ParamBinding::Kind::constant: bound.constants.insert(b.target); break;
        case ParamBinding::Kind::index_type: bound.index_types.insert(b.target); break;
        case ParamBinding::Kind::table: bound.tables.insert(b.target); break;
      }
    }
  auto compare = [&](const std::set<std::string>& want, const std::set<std::string>& have, const char* what) {
    for (const auto& n : want)
      if (!have.count(n)) errs.push_back({"ManifestMismatch", std::string(what) + " hole not bound by any parameter", n, {}});
    for (const auto& n : have)
      if (!want.count(n)) errs.push_back({"ManifestMismatch", std::string(what) + " bound but not a hole", n, {}});
  };
  compare(holes.constants, bound.constants, "constant");
  compare(holes.index_types, bound.index_types, "index type");
  compare(holes.tables, bound.tables, "table");
  for (const auto& p : t.manifest.params) {
    if (!p.default_anchor_from.empty() && !t.manifest.find(p.default_anchor_from))
      errs.push_back({"ManifestMismatch", "default refers to unknown parameter", p.default_anchor_from, {}});
    for (const auto& other : p.same_length_as)
      if (!t.manifest.find(other))
        errs.push_back({"ManifestMismatch", "constraint refers to unknown parameter", other, {}});
  }
  if (!errs.empty()) throw Error(Stage::validate, std::move(errs));
}

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError(0, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(0, p.filename().string() + ": " + e.what());
  }
}

}  // namespace detail

/// Loads a bundle directory: meta.json, source.sp, manifest.json and the
/// optional example.json. Throws Error on any malformed part.
inline ComponentTemplate load_template(const std::filesystem::path& dir) {
  ComponentTemplate t;
  try {
    auto meta = detail::read_json(dir / "meta.json");
    t.id = meta.at("id").get<std::string>();
    t.title = meta.at("title").get<std::string>();
    t.summary = meta.value("summary", std::string{});
    if (!valid_component_id(t.id)) throw FormatError(0, "invalid component id '" + t.id + "'");
    t.source = detail::read_file(dir / "source.sp");
    t.manifest = manifest_from_json(detail::read_json(dir / "manifest.json"));
    if (std::filesystem::exists(dir / "example.json")) {
      auto ex = detail::read_json(dir / "example.json");
      const auto bindings = ex.value("bindings", nlohmann::json::object());
      const auto inputs = ex.value("inputs", nlohmann::json::object());
      for (const auto& [k, v] : bindings.items()) t.example_bindings[k] = v.get<std::string>();
      for (const auto& [k, v] : inputs.items()) t.example_inputs[k] = v.get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(0, dir.filename().string() + ": " + e.what());
  }
  verify_manifest(t);
  return t;
}

struct CatalogEntry {
  std::string id, title, summary;
};

struct CatalogIssue {
  std::string bundle;
  std::string message;
};

struct Catalog {
  std::vector<CatalogEntry> entries;  // sorted by id
  std::vector<CatalogIssue> issues;
  std::map<std::string, ComponentTemplate> templates;
};

/// Loads every bundle under `repo_dir`. Broken bundles are reported in
/// `issues`; the rest are still listed.
inline Catalog catalog(const std::filesystem::path& repo_dir) {
  Catalog cat;
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(repo_dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    try {
      ComponentTemplate t = load_template(d);
      if (cat.templates.count(t.id)) {
        cat.issues.push_back({d.filename().string(), "duplicate component id '" + t.id + "'"});
        continue;
      }
      cat.templates.emplace(t.id, std::move(t));
    } catch (const std::exception& e) {
      cat.issues.push_back({d.filename().string(), e.what()});
    }
  }
  for (const auto& [id, t] : cat.templates) cat.entries.push_back({t.id, t.title, t.summary});
  return cat;
}

// ---- parameters ------------------------------------------------------------

struct NormalizedRange {
  std::string sheet;
  CellAddr anchor;
  Orientation orientation = Orientation::y;
  long length = 1;
};

struct NormalizedBindings {
  std::map<std::string, Literal> constants;
  std::map<std::string, Bounds> index_types;
  std::vector<PlaceDirective> places;
  std::map<std::string, NormalizedRange> ranges;  // by parameter name
};

/// Parses a user range into anchor, orientation (same column: y, same
/// row: x) and length.
inline std::optional<NormalizedRange> normalize_range(const CellRange& r) {
  if (r.first.col == r.last.col && r.last.row >= r.first.row)
    return NormalizedRange{r.first.sheet, r.first, Orientation::y, r.last.row - r.first.row + 1};
  if (r.first.row == r.last.row && r.last.col >= r.first.col)
    return NormalizedRange{r.first.sheet, r.first, Orientation::x, r.last.col - r.first.col + 1};
  return std::nullopt;
}

/// Validates user bindings against the manifest. Throws ParamError listing
/// every problem (MissingParam, BadCellRef, RangeNotLinear, LengthMismatch,
/// BadNumber, BadSheetName, UnknownParam).
inline NormalizedBindings validate_params(const ComponentTemplate& t, const Bindings& bindings) {
  std::vector<Diagnostic> errs;
  auto fail = [&](const char* code, const std::string& param, std::string msg) {
    errs.push_back({code, std::move(msg), param, {}});
  };
  for (const auto& [k, v] : bindings)
    if (!t.manifest.find(k)) fail("UnknownParam", k, "no such parameter");

  NormalizedBindings out;
  std::map<std::string, std::string> sheets;  // sheet-name params
  std::vector<const ParamSpec*> deferred;

  auto lookup = [&](const ParamSpec& p) -> std::optional<std::string> {
    auto it = bindings.find(p.name);
    if (it == bindings.end() || detail::trim(it->second).empty()) return std::nullopt;
    return detail::trim(it->second);
  };

  for (const auto& p : t.manifest.params) {
    auto v = lookup(p);
    if (!v) {
      if (p.kind == ParamKind::cell_range && !p.default_anchor_from.empty()) deferred.push_back(&p);
      else if (p.required) fail("MissingParam", p.name, "required parameter not given");
      continue;
    }
    switch (p.kind) {
      case ParamKind::constant_text:
        for (const auto& b : p.binds)
          if (b.kind == ParamBinding::Kind::constant) out.constants[b.target] = Literal{*v};
        break;
      case ParamKind::constant_number: {
        auto n = parse_number(*v);
        if (!n || !std::isfinite(*n)) {
          fail("BadNumber", p.name, "not a number: '" + *v + "'");
          break;
        }
        for (const auto& b : p.binds) {
          if (b.kind == ParamBinding::Kind::constant) out.constants[b.target] = Literal{*n};
          if (b.kind == ParamBinding::Kind::index_type) {
            if (*n < 1 || std::trunc(*n) != *n || *n > kMaxRows) {
              fail("BadNumber", p.name, "length must be a positive integer");
              break;
            }
            out.index_types[b.target] = Bounds{b.lwb, b.lwb + static_cast<long>(*n) - 1};
          }
        }
        break;
      }
      case ParamKind::sheet_name:
        if (!valid_sheet_name(*v)) fail("BadSheetName", p.name, "invalid sheet name '" + *v + "'");
        else sheets[p.name] = *v;
        break;
      case ParamKind::cell_range: {
        auto r = parse_range(*v, "Sheet1");
        if (!r) {
          fail("BadCellRef", p.name, "cannot parse cell range '" + *v + "'");
          break;
        }
        auto nr = normalize_range(*r);
        if (!nr) {
          fail("RangeNotLinear", p.name, "range '" + *v + "' is neither one row nor one column");
          break;
        }
        out.ranges[p.name] = *nr;
        break;
      }
    }
  }

  for (const ParamSpec* p : deferred) {
    auto from = out.ranges.find(p->default_anchor_from);
    if (from == out.ranges.end()) continue;  // the source range already failed
    auto sheet = sheets.find(p->default_sheet_param);
    if (sheet == sheets.end()) {
      if (p->required || p->default_sheet_param.empty())
        fail("MissingParam", p->name, "give a range or a sheet name in '" + p->default_sheet_param + "'");
      else
        fail("MissingParam", p->name, "give a range or a sheet name in '" + p->default_sheet_param + "'");
      continue;
    }
    NormalizedRange nr = from->second;
    nr.sheet = sheet->second;
    nr.anchor.sheet = sheet->second;
    out.ranges[p->name] = nr;
  }

  // Ranges that bind the same index type must agree in length.
  std::map<std::string, std::pair<std::string, long>> type_length;
  for (const auto& p : t.manifest.params) {
    auto r = out.ranges.find(p.name);
    if (r == out.ranges.end()) continue;
    for (const auto& other : p.same_length_as) {
      auto o = out.ranges.find(other);
      if (o != out.ranges.end() && o->second.length != r->second.length)
        fail("LengthMismatch", p.name,
             "length " + std::to_string(r->second.length) + " differs from '" + other + "' (" +
                 std::to_string(o->second.length) + ")");
    }
    for (const auto& b : p.binds) {
      if (b.kind == ParamBinding::Kind::table)
        out.places.push_back(PlaceDirective{b.target, r->second.sheet, render_a1(r->second.anchor),
                                            r->second.orientation, {}});
      if (b.kind != ParamBinding::Kind::index_type) continue;
      auto [it, fresh] = type_length.emplace(b.target, std::pair{p.name, r->second.length});
      if (fresh) {
        out.index_types[b.target] = Bounds{b.lwb, b.lwb + r->second.length - 1};
      } else if (it->second.second != r->second.length) {
        bool reported = std::find(p.same_length_as.begin(), p.same_length_as.end(), it->second.first) !=
                        p.same_length_as.end();
        if (!reported)
          fail("LengthMismatch", p.name,
               "length " + std::to_string(r->second.length) + " differs from '" + it->second.first + "' (" +
                   std::to_string(it->second.second) + ")");
      }
    }
  }

  if (!errs.empty()) throw ParamError(std::move(errs));
  return out;
}

/// Statements that close the template's holes with the user's values.
inline std::string synthesize_prelude(const ComponentTemplate& t, const NormalizedBindings& nb) {
  std::string out = "// Instantiation parameters.\n";
  std::set<std::string> done_constants, done_types;
  for (const auto& p : t.manifest.params)
    for (const auto& b : p.binds) {
      if (b.kind == ParamBinding::Kind::constant && nb.constants.count(b.target) &&
          done_constants.insert(b.target).second)
        out += "constant " + b.target + " = " + print_literal(nb.constants.at(b.target)) + ".\n";
      if (b.kind == ParamBinding::Kind::index_type && nb.index_types.count(b.target) &&
          done_types.insert(b.target).second) {
        const Bounds& bd = nb.index_types.at(b.target);
        out += "type " + b.target + " = " + std::to_string(bd.lo) + ":" + std::to_string(bd.hi) + ".\n";
      }
    }
  for (const auto& pl : nb.places)
    out += "place(" + pl.table + ", " + quote_text(pl.sheet, '\'') + ", " + quote_text(pl.anchor, '\'') + ", " +
           orientation_name(pl.orientation) + ").\n";
  return out;
}

/// Full instantiation source: template followed by the prelude.
inline std::string instantiation_source(const ComponentTemplate& t, const Bindings& bindings) {
  NormalizedBindings nb = validate_params(t, bindings);
  std::string src = t.source;
  if (!src.empty() && src.back() != '\n') src += '\n';
  return src + "\n" + synthesize_prelude(t, nb);
}

/// validate -> synthesize -> parse -> check -> layout -> compile.
inline Compilation instantiate_full(const ComponentTemplate& t, const Bindings& bindings) {
  return compile_program(parse_program(instantiation_source(t, bindings)));
}

inline FormulaGrid instantiate(const ComponentTemplate& t, const Bindings& bindings) {
  return instantiate_full(t, bindings).grid;
}

enum class GridFormat { tsv, json };

inline std::optional<GridFormat> parse_grid_format(std::string_view s) {
  if (s == "tsv") return GridFormat::tsv;
  if (s == "json") return GridFormat::json;
  return std::nullopt;
}

inline std::string emit_grid(const FormulaGrid& g, GridFormat f) {
  return f == GridFormat::tsv ? emit_tsv(g) : emit_json(g);
}

/// Bytes of an instantiated component in the requested format. The CLI and
/// the HTTP service both go through here.
inline std::string instantiate_to_text(const ComponentTemplate& t, const Bindings& bindings, GridFormat f) {
  return emit_grid(instantiate(t, bindings), f);
}

// ---- literate documentation ---------------------------------------------------

namespace detail {

inline std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Escapes text and turns `backticked` spans into <code>.
inline std::string inline_markup(std::string_view s) {
  std::string out;
  bool in_code = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '`') {
      out += html_escape(s.substr(start, i - start));
      if (i < s.size()) {
        if (!in_code && s.find('`', i + 1) == std::string_view::npos) {
          out += '`';
        } else {
          out += in_code ? "</code>" : "<code>";
          in_code = !in_code;
        }
      }
      start = i + 1;
    }
  }
  return out;
}

inline std::string render_prose(std::string_view text) {
  std::string out;
  std::vector<std::string> para;
  auto flush = [&] {
    if (para.empty()) return;
    std::string joined;
    for (const auto& l : para) joined += (joined.empty() ? "" : " ") + l;
    out += "<p>" + inline_markup(joined) + "</p>\n";
    para.clear();
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string line = trim(text.substr(start, nl == std::string_view::npos ? text.npos : nl - start));
    if (line.empty()) {
      flush();
    } else if (line.rfind("## ", 0) == 0) {
      flush();
      out += "<h3>" + inline_markup(trim(line.substr(3))) + "</h3>\n";
    } else if (line.rfind("# ", 0) == 0) {
      flush();
      out += "<h2>" + inline_markup(trim(line.substr(2))) + "</h2>\n";
    } else {
      para.push_back(line);
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  flush();
  return out;
}

}  // namespace detail

/// Single self-contained HTML page: comment prose as paragraphs and
/// headings ("# " / "## " lines), each statement as a code block.
inline std::string render_docs(std::string_view source, std::string_view title) {
  Program p = parse_program(source);
  std::string out =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" + detail::html_escape(title) +
      "</title>\n<style>\nbody { font-family: Georgia, serif; max-width: 48em; margin: 2em auto; }\n"
      "pre.code { background: #e8f0fb; padding: 0.6em 1em; border-left: 3px solid #9bb6dd; }\n"
      "</style>\n</head>\n<body>\n";
  for (const auto& chunk : p.doc_chunks) {
    if (chunk.kind == DocChunk::Kind::code) out += "<pre class=\"code\">" + detail::html_escape(chunk.text) + "</pre>\n";
    else out += detail::render_prose(chunk.text);
  }
  out += "</body>\n</html>\n";
  return out;
}

inline std::string render_docs(const ComponentTemplate& t) { return render_docs(t.source, t.title); }

}  // namespace sheetparts
