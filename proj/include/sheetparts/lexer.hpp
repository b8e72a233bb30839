#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "sheetparts/error.hpp"

namespace sheetparts {

enum class Tok {
  end,
  ident,
  number,
  string,  // "double quoted"
  atom,    // 'single quoted'
  lparen, rparen, lbracket, rbracket, comma, dot, colon, bang, arrow,
  plus, minus, star, slash, amp,
  eq, ne, lt, gt, le, ge,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;  // identifier spelling, raw number text, or decoded string
  SourcePos pos;
  std::size_t offset = 0;  // byte offset of the first character
  std::size_t end = 0;     // byte offset one past the last character
};

/// A comment seen while scanning, kept for literate rendering.
struct Comment {
  std::size_t offset = 0;
  std::size_t end = 0;
  std::string text;
};

inline const char* tok_name(Tok t) {
  switch (t) {
    case Tok::end: return "end of input";
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::string: return "string";
    case Tok::atom: return "quoted atom";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::comma: return "','";
    case Tok::dot: return "'.'";
    case Tok::colon: return "':'";
    case Tok::bang: return "'!'";
    case Tok::arrow: return "'->'";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::amp: return "'&'";
    case Tok::eq: return "'='";
    case Tok::ne: return "'<>'";
    case Tok::lt: return "'<'";
    case Tok::gt: return "'>'";
    case Tok::le: return "'<='";
    case Tok::ge: return "'>='";
  }
  return "token";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {
    if (src_.substr(0, 3) == "\xEF\xBB\xBF") i_ = 3;
  }

  /// Scans the whole input. Throws ParseError on malformed lexemes.
  std::vector<Token> tokenize() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t = next();
      bool done = t.kind == Tok::end;
      out.push_back(std::move(t));
      if (done) return out;
    }
  }

  const std::vector<Comment>& comments() const { return comments_; }

 private:
  SourcePos here() const { return {line_, col_}; }

  char peek(std::size_t ahead = 0) const {
    return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0';
  }
  bool at_end() const { return i_ >= src_.size(); }

  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_space_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        std::size_t start = i_;
        advance();
        advance();
        std::size_t body = i_;
        while (!at_end() && peek() != '\n') advance();
        comments_.push_back({start, i_, std::string(src_.substr(body, i_ - body))});
      } else if (c == '/' && peek(1) == '*') {
        std::size_t start = i_;
        SourcePos p = here();
        advance();
        advance();
        std::size_t body = i_;
        while (!(peek() == '*' && peek(1) == '/')) {
          if (at_end()) throw ParseError(p, "unterminated block comment");
          advance();
        }
        std::size_t body_end = i_;
        advance();
        advance();
        comments_.push_back({start, i_, std::string(src_.substr(body, body_end - body))});
      } else {
        return;
      }
    }
  }

  Token make(Tok k, std::size_t start, SourcePos p, std::string text = {}) const {
    return Token{k, std::move(text), p, start, i_};
  }

  Token next() {
    SourcePos p = here();
    std::size_t start = i_;
    if (at_end()) return make(Tok::end, start, p);
    unsigned char c = static_cast<unsigned char>(peek());

    if (std::isalpha(c) || c == '_') {
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
        advance();
      return make(Tok::ident, start, p, std::string(src_.substr(start, i_ - start)));
    }
    if (std::isdigit(c)) {
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      // A '.' only belongs to the number when a digit follows; otherwise it
      // is the statement terminator.
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
      if ((peek() == 'e' || peek() == 'E') &&
          (std::isdigit(static_cast<unsigned char>(peek(1))) ||
           ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
        advance();
        if (peek() == '+' || peek() == '-') advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
      return make(Tok::number, start, p, std::string(src_.substr(start, i_ - start)));
    }
    if (c == '"' || c == '\'') {
      char q = static_cast<char>(c);
      advance();
      std::string value;
      for (;;) {
        if (at_end()) throw ParseError(p, "unterminated string literal");
        if (peek() == q) {
          if (peek(1) == q) {
            value += q;
            advance();
            advance();
            continue;
          }
          advance();
          break;
        }
        value += peek();
        advance();
      }
      return make(q == '"' ? Tok::string : Tok::atom, start, p, std::move(value));
    }

    advance();
    switch (c) {
      case '(': return make(Tok::lparen, start, p);
      case ')': return make(Tok::rparen, start, p);
      case '[': return make(Tok::lbracket, start, p);
      case ']': return make(Tok::rbracket, start, p);
      case ',': return make(Tok::comma, start, p);
      case '.': return make(Tok::dot, start, p);
      case ':': return make(Tok::colon, start, p);
      case '!': return make(Tok::bang, start, p);
      case '+': return make(Tok::plus, start, p);
      case '*': return make(Tok::star, start, p);
      case '/': return make(Tok::slash, start, p);
      case '&': return make(Tok::amp, start, p);
      case '=': return make(Tok::eq, start, p);
      case '-':
        if (peek() == '>') {
          advance();
          return make(Tok::arrow, start, p);
        }
        return make(Tok::minus, start, p);
      case '<':
        if (peek() == '>') {
          advance();
          return make(Tok::ne, start, p);
        }
        if (peek() == '=') {
          advance();
          return make(Tok::le, start, p);
        }
        return make(Tok::lt, start, p);
      case '>':
        if (peek() == '=') {
          advance();
          return make(Tok::ge, start, p);
        }
        return make(Tok::gt, start, p);
      default: break;
    }
    std::string shown = std::isprint(c) ? std::string(1, static_cast<char>(c))
                                        : "byte 0x" + hex(c);
    throw ParseError(p, "unexpected character " + shown);
  }

  static std::string hex(unsigned char c) {
    const char* digits = "0123456789abcdef";
    return {digits[c >> 4], digits[c & 15]};
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::vector<Comment> comments_;
};

}  // namespace sheetparts
