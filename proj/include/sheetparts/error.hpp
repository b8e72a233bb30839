#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sheetparts {

/// Pipeline stage an error originated in. Used to label errors coming out of
/// instantiation, where any stage may fail.
enum class Stage { validate, parse, check, layout, compile, eval, format };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::validate: return "validate";
    case Stage::parse: return "parse";
    case Stage::check: return "check";
    case Stage::layout: return "layout";
    case Stage::compile: return "compile";
    case Stage::eval: return "eval";
    case Stage::format: return "format";
  }
  return "unknown";
}

struct SourcePos {
  int line = 0;
  int col = 0;
};

/// One reported problem. `code` is a stable machine-readable tag such as
/// "UnknownName" or "MissingParam"; `subject` names the offending entity.
struct Diagnostic {
  std::string code;
  std::string message;
  std::string subject;
  SourcePos pos;

  std::string to_string() const {
    std::string out;
    if (pos.line > 0)
      out += std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": ";
    out += code;
    if (!subject.empty()) out += " '" + subject + "'";
    if (!message.empty()) out += ": " + message;
    return out;
  }
};

class Error : public std::runtime_error {
 public:
  Error(Stage stage, std::vector<Diagnostic> diags)
      : std::runtime_error(summarize(stage, diags)), stage_(stage), diags_(std::move(diags)) {}

  Stage stage() const noexcept { return stage_; }
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

 private:
  static std::string summarize(Stage stage, const std::vector<Diagnostic>& diags) {
    std::string out = stage_name(stage);
    out += " error";
    if (!diags.empty()) out += ": " + diags.front().to_string();
    if (diags.size() > 1) out += " (+" + std::to_string(diags.size() - 1) + " more)";
    return out;
  }

  Stage stage_;
  std::vector<Diagnostic> diags_;
};

class ParseError : public Error {
 public:
  ParseError(SourcePos pos, std::string message)
      : Error(Stage::parse, {Diagnostic{"ParseError", std::move(message), {}, pos}}) {}
  SourcePos pos() const { return diagnostics().front().pos; }
};

class CheckError : public Error {
 public:
  explicit CheckError(std::vector<Diagnostic> diags) : Error(Stage::check, std::move(diags)) {}
};

class LayoutError : public Error {
 public:
  LayoutError(std::string code, std::string message, std::string subject = {})
      : Error(Stage::layout, {Diagnostic{std::move(code), std::move(message), std::move(subject), {}}}) {}
};

class CompileError : public Error {
 public:
  CompileError(std::string code, std::string message, std::string subject = {}, SourcePos pos = {})
      : Error(Stage::compile, {Diagnostic{std::move(code), std::move(message), std::move(subject), pos}}) {}
};

class ParamError : public Error {
 public:
  explicit ParamError(std::vector<Diagnostic> diags) : Error(Stage::validate, std::move(diags)) {}
};

class FormatError : public Error {
 public:
  FormatError(int line, std::string message)
      : Error(Stage::format, {Diagnostic{"FormatError", std::move(message), {}, SourcePos{line, 0}}}) {}
};

}  // namespace sheetparts
