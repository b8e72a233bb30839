#pragma once

#include <cctype>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace sheetparts {

inline constexpr int kMaxCols = 16384;
inline constexpr int kMaxRows = 1048576;

/// 1-based column/row cell position with an owning sheet name.
struct CellAddr {
  std::string sheet;
  int col = 1;
  int row = 1;

  auto operator<=>(const CellAddr&) const = default;
  bool operator==(const CellAddr&) const = default;
};

/// Sort key used everywhere cells are listed: sheet, then row, then column.
inline bool row_major_less(const CellAddr& a, const CellAddr& b) {
  if (a.sheet != b.sheet) return a.sheet < b.sheet;
  if (a.row != b.row) return a.row < b.row;
  return a.col < b.col;
}

struct RowMajorLess {
  bool operator()(const CellAddr& a, const CellAddr& b) const { return row_major_less(a, b); }
};

/// Inclusive rectangle on one sheet.
struct Rect {
  std::string sheet;
  int row = 1;
  int col = 1;
  int rows = 1;
  int cols = 1;

  int last_row() const { return row + rows - 1; }
  int last_col() const { return col + cols - 1; }
  bool contains(const CellAddr& a) const {
    return a.sheet == sheet && a.row >= row && a.row <= last_row() && a.col >= col &&
           a.col <= last_col();
  }
  bool intersects(const Rect& o) const {
    return sheet == o.sheet && row <= o.last_row() && o.row <= last_row() && col <= o.last_col() &&
           o.col <= last_col();
  }
  bool operator==(const Rect&) const = default;
};

inline std::string column_letters(int col) {
  std::string out;
  while (col > 0) {
    int rem = (col - 1) % 26;
    out.insert(out.begin(), static_cast<char>('A' + rem));
    col = (col - 1) / 26;
  }
  return out;
}

/// "A1"-style rendering without sheet prefix.
inline std::string render_a1(int col, int row) { return column_letters(col) + std::to_string(row); }
inline std::string render_a1(const CellAddr& a) { return render_a1(a.col, a.row); }

inline std::string render_qualified(const CellAddr& a, std::string_view from_sheet) {
  if (a.sheet == from_sheet || a.sheet.empty()) return render_a1(a);
  return a.sheet + "!" + render_a1(a);
}

inline bool valid_sheet_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

/// Parses a bare A1 reference (case-insensitive). Returns nullopt for anything
/// else, including out-of-range positions.
inline std::optional<std::pair<int, int>> parse_a1_position(std::string_view s) {
  std::size_t i = 0;
  long col = 0;
  while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
    col = col * 26 + (std::toupper(static_cast<unsigned char>(s[i])) - 'A' + 1);
    if (col > kMaxCols) return std::nullopt;
    ++i;
  }
  if (i == 0 || i > 3 || i == s.size()) return std::nullopt;
  if (s[i] == '0') return std::nullopt;
  long row = 0;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    row = row * 10 + (s[i] - '0');
    if (row > kMaxRows) return std::nullopt;
  }
  return std::pair{static_cast<int>(col), static_cast<int>(row)};
}

/// Parses "A1" or "Sheet!A1". `default_sheet` is used when no prefix is given.
inline std::optional<CellAddr> parse_a1(std::string_view s, std::string_view default_sheet = {}) {
  std::string sheet(default_sheet);
  if (auto bang = s.find('!'); bang != std::string_view::npos) {
    sheet = std::string(s.substr(0, bang));
    if (!valid_sheet_name(sheet)) return std::nullopt;
    s = s.substr(bang + 1);
  }
  auto pos = parse_a1_position(s);
  if (!pos) return std::nullopt;
  return CellAddr{sheet, pos->first, pos->second};
}

/// A user-supplied linear range "Sheet!A3:A15" (sheet optional). A single
/// cell is a range of length one.
struct CellRange {
  CellAddr first;
  CellAddr last;
};

inline std::optional<CellRange> parse_range(std::string_view s, std::string_view default_sheet = {}) {
  std::string sheet(default_sheet);
  if (auto bang = s.find('!'); bang != std::string_view::npos) {
    sheet = std::string(s.substr(0, bang));
    if (!valid_sheet_name(sheet)) return std::nullopt;
    s = s.substr(bang + 1);
  }
  auto colon = s.find(':');
  auto a = parse_a1_position(s.substr(0, colon));
  if (!a) return std::nullopt;
  auto b = a;
  if (colon != std::string_view::npos) {
    b = parse_a1_position(s.substr(colon + 1));
    if (!b) return std::nullopt;
  }
  return CellRange{CellAddr{sheet, a->first, a->second}, CellAddr{sheet, b->first, b->second}};
}

}  // namespace sheetparts
