#pragma once

#include <string>

#include "sheetparts/number.hpp"

namespace sheetparts {

enum class ErrorKind { na, ref, value, div0, name, cycle };

inline const char* error_text(ErrorKind k) {
  switch (k) {
    case ErrorKind::na: return "#N/A";
    case ErrorKind::ref: return "#REF!";
    case ErrorKind::value: return "#VALUE!";
    case ErrorKind::div0: return "#DIV/0!";
    case ErrorKind::name: return "#NAME?";
    case ErrorKind::cycle: return "#CYCLE!";
  }
  return "#VALUE!";
}

/// Evaluator scalar. Logical results are represented as the numbers 1 and 0.
struct Value {
  enum class Kind { blank, number, text, error };
  Kind kind = Kind::blank;
  double number = 0;
  std::string text;
  ErrorKind error = ErrorKind::value;

  static Value blank() { return {}; }
  static Value num(double v) { return {Kind::number, v, {}, ErrorKind::value}; }
  static Value str(std::string s) { return {Kind::text, 0, std::move(s), ErrorKind::value}; }
  static Value err(ErrorKind e) { return {Kind::error, 0, {}, e}; }
  static Value boolean(bool b) { return num(b ? 1 : 0); }

  bool is_blank() const { return kind == Kind::blank; }
  bool is_number() const { return kind == Kind::number; }
  bool is_text() const { return kind == Kind::text; }
  bool is_error() const { return kind == Kind::error; }

  /// Display form: canonical number text, raw text, "" for blank, or the
  /// spreadsheet error code.
  std::string display() const {
    switch (kind) {
      case Kind::blank: return {};
      case Kind::number: return format_number(number);
      case Kind::text: return text;
      case Kind::error: return error_text(error);
    }
    return {};
  }

  bool operator==(const Value& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
      case Kind::blank: return true;
      case Kind::number: return number == o.number;
      case Kind::text: return text == o.text;
      case Kind::error: return error == o.error;
    }
    return false;
  }
};

}  // namespace sheetparts
