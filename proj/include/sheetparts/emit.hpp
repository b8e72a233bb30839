#pragma once

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheetparts/a1.hpp"
#include "sheetparts/error.hpp"
#include "sheetparts/eval.hpp"
#include "sheetparts/grid.hpp"
#include "sheetparts/number.hpp"
#include "sheetparts/value.hpp"

namespace sheetparts {

namespace detail {

inline std::string escape_field(std::string_view s, bool escape_pipe = false) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '|':
        if (escape_pipe) out += "\\|";
        else out += c;
        break;
      default: out += c;
    }
  }
  return out;
}

/// Undoes escape_field. With `split_pipes`, unescaped '|' separates items.
inline std::vector<std::string> unescape_field(std::string_view s, int line, bool split_pipes) {
  std::vector<std::string> items(1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '|' && split_pipes) {
      items.emplace_back();
      continue;
    }
    if (c != '\\') {
      items.back() += c;
      continue;
    }
    if (++i == s.size()) throw FormatError(line, "dangling backslash");
    switch (s[i]) {
      case '\\': items.back() += '\\'; break;
      case 't': items.back() += '\t'; break;
      case 'n': items.back() += '\n'; break;
      case 'r': items.back() += '\r'; break;
      case '|': items.back() += '|'; break;
      default: throw FormatError(line, std::string("unknown escape \\") + s[i]);
    }
  }
  return items;
}

inline std::string join_options(const std::vector<std::string>& opts) {
  std::string out;
  for (std::size_t i = 0; i < opts.size(); ++i) {
    if (i) out += '|';
    out += escape_field(opts[i], true);
  }
  return out;
}

inline const char* kind_code(CellContent::Kind k) {
  switch (k) {
    case CellContent::Kind::formula: return "F";
    case CellContent::Kind::number: return "N";
    case CellContent::Kind::text: return "S";
    case CellContent::Kind::blank: return "D";
  }
  return "S";
}

inline std::string content_payload(const CellContent& c) {
  switch (c.kind) {
    case CellContent::Kind::formula:
    case CellContent::Kind::text: return c.text;
    case CellContent::Kind::number: return format_number(c.number);
    case CellContent::Kind::blank: return {};
  }
  return {};
}

inline std::optional<ElemType> parse_elem_type(std::string_view s) {
  if (s == "general") return ElemType::general;
  if (s == "text") return ElemType::text;
  if (s == "number") return ElemType::number;
  return std::nullopt;
}

}  // namespace detail

/// One record per line: sheet, cell, kind (F/N/S/D), payload; tab separated,
/// sorted by sheet, row, column. A dropdown cell carries its value record
/// followed by a D record listing the options.
inline std::string emit_tsv(const FormulaGrid& grid) {
  std::string out;
  for (const auto& [a, cell] : grid.cells()) {
    std::string prefix = a.sheet + "\t" + render_a1(a) + "\t";
    if (cell.content.kind != CellContent::Kind::blank)
      out += prefix + detail::kind_code(cell.content.kind) + "\t" +
             detail::escape_field(detail::content_payload(cell.content)) + "\n";
    if (cell.validation) out += prefix + "D\t" + detail::join_options(*cell.validation) + "\n";
  }
  return out;
}

inline FormulaGrid parse_tsv(std::string_view text) {
  FormulaGrid grid;
  std::set<CellAddr, RowMajorLess> has_content, has_validation;
  int line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    ++line_no;
    auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
    start = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t f = 0;
    for (;;) {
      auto tab = line.find('\t', f);
      fields.push_back(line.substr(f, tab == std::string_view::npos ? line.npos : tab - f));
      if (tab == std::string_view::npos) break;
      f = tab + 1;
    }
    if (fields.size() != 4) throw FormatError(line_no, "expected 4 tab-separated fields");
    std::string sheet(fields[0]);
    if (!valid_sheet_name(sheet)) throw FormatError(line_no, "invalid sheet name '" + sheet + "'");
    auto pos = parse_a1_position(fields[1]);
    if (!pos) throw FormatError(line_no, "invalid cell reference '" + std::string(fields[1]) + "'");
    CellAddr a{sheet, pos->first, pos->second};
    std::string_view kind = fields[2];
    if (kind == "D") {
      if (!has_validation.insert(a).second) throw FormatError(line_no, "duplicate dropdown record");
      grid.set_validation(a, detail::unescape_field(fields[3], line_no, true));
      continue;
    }
    std::string payload = detail::unescape_field(fields[3], line_no, false).front();
    CellContent c;
    if (kind == "F") {
      c = CellContent::formula(payload);
    } else if (kind == "N") {
      auto v = parse_number(payload);
      if (!v) throw FormatError(line_no, "invalid number '" + payload + "'");
      c = CellContent::literal_number(*v);
    } else if (kind == "S") {
      c = CellContent::literal_text(payload);
    } else {
      throw FormatError(line_no, "unknown record kind '" + std::string(kind) + "'");
    }
    if (!has_content.insert(a).second) throw FormatError(line_no, "duplicate record for cell");
    grid.set_content(a, std::move(c));
  }
  return grid;
}

inline nlohmann::ordered_json grid_to_json(const FormulaGrid& grid) {
  nlohmann::ordered_json sheets = nlohmann::ordered_json::array();
  for (const auto& sheet : grid.sheets()) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& [a, cell] : grid.cells()) {
      if (a.sheet != sheet) continue;
      nlohmann::ordered_json j;
      j["ref"] = render_a1(a);
      j["kind"] = detail::kind_code(cell.content.kind);
      j["payload"] = detail::content_payload(cell.content);
      if (cell.content.kind == CellContent::Kind::formula) j["type"] = elem_type_name(cell.content.type);
      if (cell.validation) j["validation"] = *cell.validation;
      cells.push_back(std::move(j));
    }
    sheets.push_back({{"name", sheet}, {"cells", std::move(cells)}});
  }
  nlohmann::ordered_json root;
  root["version"] = 1;
  root["sheets"] = std::move(sheets);
  return root;
}

/// {"version":1,"sheets":[{"name","cells":[{"ref","kind","payload",
/// "type"?,"validation"?}]}]}
inline std::string emit_json(const FormulaGrid& grid) { return grid_to_json(grid).dump(2) + "\n"; }

inline FormulaGrid grid_from_json(const nlohmann::json& root) {
  FormulaGrid grid;
  try {
    if (root.contains("version") && root.at("version") != 1) throw FormatError(0, "unsupported version");
    for (const auto& sheet : root.at("sheets")) {
      std::string name = sheet.at("name").get<std::string>();
      if (!valid_sheet_name(name)) throw FormatError(0, "invalid sheet name '" + name + "'");
      for (const auto& c : sheet.at("cells")) {
        std::string ref = c.at("ref").get<std::string>();
        auto pos = parse_a1_position(ref);
        if (!pos) throw FormatError(0, "invalid cell reference '" + ref + "'");
        CellAddr a{name, pos->first, pos->second};
        std::string kind = c.at("kind").get<std::string>();
        std::string payload = c.value("payload", std::string{});
        CellContent content;
        if (kind == "F") {
          auto t = detail::parse_elem_type(c.value("type", std::string("general")));
          if (!t) throw FormatError(0, "unknown element type");
          content = CellContent::formula(payload, *t);
        } else if (kind == "N") {
          auto v = parse_number(payload);
          if (!v) throw FormatError(0, "invalid number '" + payload + "'");
          content = CellContent::literal_number(*v);
        } else if (kind == "S") {
          content = CellContent::literal_text(payload);
        } else if (kind != "D") {
          throw FormatError(0, "unknown cell kind '" + kind + "'");
        }
        GridCell cell{content, std::nullopt};
        if (c.contains("validation")) cell.validation = c.at("validation").get<std::vector<std::string>>();
        if (grid.contains(a)) throw FormatError(0, "duplicate cell " + name + "!" + ref);
        grid.set(a, std::move(cell));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(0, std::string("malformed grid JSON: ") + e.what());
  }
  return grid;
}

inline FormulaGrid parse_json(std::string_view text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(0, std::string("invalid JSON: ") + e.what());
  }
  return grid_from_json(root);
}

inline nlohmann::ordered_json value_to_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::blank: return nullptr;
    case Value::Kind::number: return v.number;
    case Value::Kind::text: return v.text;
    case Value::Kind::error: return error_text(v.error);
  }
  return nullptr;
}

inline const char* value_kind_name(const Value& v) {
  switch (v.kind) {
    case Value::Kind::blank: return "blank";
    case Value::Kind::number: return "number";
    case Value::Kind::text: return "text";
    case Value::Kind::error: return "error";
  }
  return "blank";
}

inline nlohmann::ordered_json values_to_json(const ValueGrid& values) {
  std::vector<std::string> sheets;
  for (const auto& [a, v] : values)
    if (sheets.empty() || sheets.back() != a.sheet) sheets.push_back(a.sheet);
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& sheet : sheets) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& [a, v] : values) {
      if (a.sheet != sheet) continue;
      cells.push_back({{"ref", render_a1(a)}, {"type", value_kind_name(v)}, {"value", value_to_json(v)}});
    }
    out.push_back({{"name", sheet}, {"cells", std::move(cells)}});
  }
  nlohmann::ordered_json root;
  root["version"] = 1;
  root["sheets"] = std::move(out);
  return root;
}

inline std::string emit_values_json(const ValueGrid& values) { return values_to_json(values).dump(2) + "\n"; }

namespace detail {

inline std::string csv_field(const Value& v) {
  switch (v.kind) {
    case Value::Kind::blank: return {};
    case Value::Kind::number: return format_number(v.number);
    case Value::Kind::error: return error_text(v.error);
    case Value::Kind::text: {
      std::string out = "\"";
      for (char c : v.text) {
        out += c;
        if (c == '"') out += '"';
      }
      return out + "\"";
    }
  }
  return {};
}

}  // namespace detail

/// Rectangular CSV from A1 to the last used row/column of each sheet. Text
/// is always quoted. With several sheets each block starts with a
/// `#sheet,<name>` line.
inline std::string emit_values_csv(const ValueGrid& values) {
  std::vector<std::string> sheets;
  for (const auto& [a, v] : values)
    if (sheets.empty() || sheets.back() != a.sheet) sheets.push_back(a.sheet);
  std::string out;
  for (const auto& sheet : sheets) {
    int max_row = 0, max_col = 0;
    for (const auto& [a, v] : values)
      if (a.sheet == sheet) {
        max_row = std::max(max_row, a.row);
        max_col = std::max(max_col, a.col);
      }
    if (sheets.size() > 1) out += "#sheet," + sheet + "\n";
    for (int r = 1; r <= max_row; ++r) {
      for (int c = 1; c <= max_col; ++c) {
        if (c > 1) out += ',';
        out += detail::csv_field(value_at(values, CellAddr{sheet, c, r}));
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace sheetparts
