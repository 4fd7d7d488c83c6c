// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "python_lexer.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

namespace scholex::python::detail {
namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest first within each length class.
constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+",   "-",   "*",   "/",   "%",   "@",  "&",  "|",  "^",  "~",  "<",  ">",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ".",  ";",  "="};

bool ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

bool ident_char(unsigned char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Lexer {
 public:
  Lexer(std::string_view src, Position origin, bool expression_mode)
      : src_(src), line_(origin.line), col_(origin.column), expr_mode_(expression_mode) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    at_line_start_ = !expr_mode_;
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (handle_indentation()) continue;
      }
      unsigned char c = peek();
      if (c == '#') {
        while (pos_ < src_.size() && peek() != '\n') advance();
        continue;
      }
      if (c == '\\' && (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
        advance();
        if (peek() == '\r') advance();
        advance();
        if (pos_ >= src_.size()) throw SyntaxError(here(), "unexpected EOF after line continuation");
        continue;
      }
      if (c == '\n' || c == '\r') {
        Position p = here();
        if (c == '\r' && peek(1) == '\n') advance();
        advance();
        if (depth_ == 0 && !expr_mode_) {
          if (line_has_tokens_) push(Tok::Newline, "\n", p, p);
          line_has_tokens_ = false;
          at_line_start_ = true;
        }
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\f') {
        advance();
        continue;
      }
      line_has_tokens_ = true;
      if (ident_start(c)) {
        lex_name_or_string();
      } else if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
        lex_number();
      } else if (c == '"' || c == '\'') {
        lex_string(pos_, here(), "");
      } else {
        lex_operator();
      }
    }
    if (depth_ > 0) throw SyntaxError(bracket_open_.back(), "'" + std::string(1, brackets_.back()) + "' was never closed");
    Position end = here();
    if (!expr_mode_) {
      if (line_has_tokens_) push(Tok::Newline, "", end, end);
      while (indents_.size() > 1) {
        indents_.pop_back();
        push(Tok::Dedent, "", end, end);
      }
    }
    push(Tok::End, "", end, end);
    return std::move(tokens_);
  }

 private:
  unsigned char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? static_cast<unsigned char>(src_[pos_ + ahead]) : 0;
  }

  Position here() const { return {line_, col_}; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 0;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void push(Tok type, std::string text, Position b, Position e) {
    Token t;
    t.type = type;
    t.text = std::move(text);
    t.begin = b;
    t.end = e;
    tokens_.push_back(std::move(t));
  }

  // Returns true when it consumed a blank/comment line entirely.
  bool handle_indentation() {
    int width = 0;
    std::size_t scan = pos_;
    while (scan < src_.size()) {
      char c = src_[scan];
      if (c == ' ') ++width;
      else if (c == '\t') width = (width / 8 + 1) * 8;
      else if (c == '\f') width = 0;
      else break;
      ++scan;
    }
    char next = scan < src_.size() ? src_[scan] : '\n';
    if (next == '\n' || next == '\r' || next == '#' ||
        (next == '\\' && scan + 1 < src_.size() && src_[scan + 1] == '\n')) {
      // Blank or comment-only line: indentation is irrelevant.
      while (pos_ < scan) advance();
      if (next == '#') {
        while (pos_ < src_.size() && peek() != '\n') advance();
      }
      if (pos_ < src_.size()) {
        if (peek() == '\\') advance();
        if (peek() == '\r') advance();
        if (pos_ < src_.size()) advance();
      }
      return true;
    }
    while (pos_ < scan) advance();
    at_line_start_ = false;
    Position p = here();
    if (width > indents_.back()) {
      indents_.push_back(width);
      push(Tok::Indent, "", p, p);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        push(Tok::Dedent, "", p, p);
      }
      if (width != indents_.back()) {
        throw SyntaxError(p, "unindent does not match any outer indentation level");
      }
    }
    return false;
  }

  void lex_name_or_string() {
    std::size_t start = pos_;
    Position b = here();
    // String prefix?
    std::size_t k = pos_;
    while (k < src_.size() && k - pos_ < 3 &&
           std::string_view("rRbBuUfF").find(src_[k]) != std::string_view::npos)
      ++k;
    if (k < src_.size() && k > pos_ && (src_[k] == '"' || src_[k] == '\'')) {
      std::string prefix(src_.substr(pos_, k - pos_));
      std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      bool valid = prefix == "r" || prefix == "b" || prefix == "u" || prefix == "f" ||
                   prefix == "rb" || prefix == "br" || prefix == "fr" || prefix == "rf";
      if (valid) {
        while (pos_ < k) advance();
        lex_string(start, b, prefix);
        return;
      }
    }
    while (pos_ < src_.size() && ident_char(peek())) advance();
    push(Tok::Name, std::string(src_.substr(start, pos_ - start)), b, here());
  }

  void lex_number() {
    std::size_t start = pos_;
    Position b = here();
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() && (pred(peek()) || (peek() == '_' && pred(peek(1))))) advance();
    };
    auto dec = [](unsigned char c) { return is_digit(c); };
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      advance(); advance();
      digits([](unsigned char c) { return std::isxdigit(c) != 0; });
    } else if (peek() == '0' && (peek(1) == 'o' || peek(1) == 'O')) {
      advance(); advance();
      digits([](unsigned char c) { return c >= '0' && c <= '7'; });
    } else if (peek() == '0' && (peek(1) == 'b' || peek(1) == 'B')) {
      advance(); advance();
      digits([](unsigned char c) { return c == '0' || c == '1'; });
    } else {
      digits(dec);
      if (peek() == '.' ) {
        advance();
        digits(dec);
      }
      if ((peek() == 'e' || peek() == 'E') &&
          (is_digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && is_digit(peek(2))))) {
        advance();
        if (peek() == '+' || peek() == '-') advance();
        digits(dec);
      }
      if (peek() == 'j' || peek() == 'J') advance();
    }
    if (pos_ < src_.size() && ident_start(peek())) {
      throw SyntaxError(here(), "invalid decimal literal");
    }
    push(Tok::Number, std::string(src_.substr(start, pos_ - start)), b, here());
  }

  // Skips a nested string literal inside an f-string replacement field.
  void skip_nested_string() {
    char q = static_cast<char>(peek());
    bool triple = peek(1) == static_cast<unsigned char>(q) && peek(2) == static_cast<unsigned char>(q);
    advance();
    if (triple) { advance(); advance(); }
    while (pos_ < src_.size()) {
      if (peek() == '\\') {
        advance();
        if (pos_ < src_.size()) advance();
        continue;
      }
      if (peek() == static_cast<unsigned char>(q)) {
        if (!triple) { advance(); return; }
        if (peek(1) == static_cast<unsigned char>(q) && peek(2) == static_cast<unsigned char>(q)) {
          advance(); advance(); advance();
          return;
        }
      }
      if (!triple && peek() == '\n') throw SyntaxError(here(), "unterminated string literal");
      advance();
    }
    throw SyntaxError(here(), "unterminated string literal");
  }

  void lex_string(std::size_t start, Position b, const std::string& prefix) {
    char q = static_cast<char>(peek());
    bool triple = peek(1) == static_cast<unsigned char>(q) && peek(2) == static_cast<unsigned char>(q);
    advance();
    if (triple) { advance(); advance(); }
    std::size_t body_start = pos_;
    Position body_begin = here();
    const bool fstring = prefix.find('f') != std::string::npos;
    int brace_depth = 0;
    for (;;) {
      if (pos_ >= src_.size()) throw SyntaxError(b, "unterminated string literal");
      unsigned char c = peek();
      if (fstring) {
        if (c == '{') {
          if (brace_depth == 0 && peek(1) == '{') { advance(); advance(); continue; }
          ++brace_depth;
        } else if (c == '}' && brace_depth > 0) {
          --brace_depth;
        } else if (brace_depth > 0 && (c == '"' || c == '\'') && c != static_cast<unsigned char>(q)) {
          skip_nested_string();
          continue;
        }
      }
      if (c == '\\') {
        advance();
        if (pos_ < src_.size()) advance();
        continue;
      }
      if (c == static_cast<unsigned char>(q)) {
        if (!triple) break;
        if (peek(1) == static_cast<unsigned char>(q) && peek(2) == static_cast<unsigned char>(q)) break;
      }
      if (!triple && (c == '\n' || c == '\r')) throw SyntaxError(b, "unterminated string literal");
      advance();
    }
    std::size_t body_end = pos_;
    advance();
    if (triple) { advance(); advance(); }
    Token t;
    t.type = Tok::String;
    t.text = std::string(src_.substr(start, pos_ - start));
    t.begin = b;
    t.end = here();
    t.prefix = prefix;
    t.body = std::string(src_.substr(body_start, body_end - body_start));
    t.body_begin = body_begin;
    tokens_.push_back(std::move(t));
  }

  void lex_operator() {
    Position b = here();
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        for (std::size_t i = 0; i < op.size(); ++i) advance();
        char c = op[0];
        if (op.size() == 1 && (c == '(' || c == '[' || c == '{')) {
          ++depth_;
          brackets_.push_back(c);
          bracket_open_.push_back(b);
        } else if (op.size() == 1 && (c == ')' || c == ']' || c == '}')) {
          char open = c == ')' ? '(' : c == ']' ? '[' : '{';
          if (depth_ == 0 || brackets_.back() != open) {
            throw SyntaxError(b, "unmatched '" + std::string(1, c) + "'");
          }
          --depth_;
          brackets_.pop_back();
          bracket_open_.pop_back();
        }
        push(Tok::Op, std::string(op), b, here());
        return;
      }
    }
    if (peek() == '!' ) {
      throw SyntaxError(b, "invalid syntax");
    }
    throw SyntaxError(b, std::string("invalid character '") + static_cast<char>(peek()) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_;
  int col_;
  bool expr_mode_;
  int depth_ = 0;
  std::vector<char> brackets_;
  std::vector<Position> bracket_open_;
  std::vector<int> indents_;
  bool at_line_start_ = true;
  bool line_has_tokens_ = false;
  std::vector<Token> tokens_;
};

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<Token> tokenize(std::string_view source, Position origin, bool expression_mode) {
  return Lexer(source, origin, expression_mode).run();
}

std::string decode_escapes(std::string_view body, bool is_bytes, Position where) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c != '\\' || i + 1 >= body.size()) {
      out.push_back(c);
      continue;
    }
    char e = body[++i];
    auto hex_value = [&](std::size_t count) -> std::uint32_t {
      std::uint32_t v = 0;
      for (std::size_t k = 1; k <= count; ++k) {
        if (i + k >= body.size()) throw SyntaxError(where, "truncated escape sequence");
        char h = body[i + k];
        if (!std::isxdigit(static_cast<unsigned char>(h))) {
          throw SyntaxError(where, "truncated escape sequence");
        }
        v = v * 16 + static_cast<std::uint32_t>(std::isdigit(static_cast<unsigned char>(h))
                                                    ? h - '0'
                                                    : std::tolower(h) - 'a' + 10);
      }
      i += count;
      return v;
    };
    switch (e) {
      case '\n': break;
      case '\\': out.push_back('\\'); break;
      case '\'': out.push_back('\''); break;
      case '"': out.push_back('"'); break;
      case 'a': out.push_back('\a'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 't': out.push_back('\t'); break;
      case 'v': out.push_back('\v'); break;
      case 'x': {
        std::uint32_t v = hex_value(2);
        if (is_bytes) out.push_back(static_cast<char>(v));
        else append_utf8(out, v);
        break;
      }
      case 'u':
      case 'U':
        if (is_bytes) {
          out.push_back('\\');
          out.push_back(e);
        } else {
          append_utf8(out, hex_value(e == 'u' ? 4 : 8));
        }
        break;
      case 'N':
        // Named characters stay spelled out; only the value text matters.
        out.push_back('\\');
        out.push_back('N');
        break;
      default:
        if (e >= '0' && e <= '7') {
          std::uint32_t v = static_cast<std::uint32_t>(e - '0');
          for (int k = 0; k < 2 && i + 1 < body.size() && body[i + 1] >= '0' && body[i + 1] <= '7'; ++k) {
            v = v * 8 + static_cast<std::uint32_t>(body[++i] - '0');
          }
          if (is_bytes) out.push_back(static_cast<char>(v & 0xFF));
          else append_utf8(out, v);
        } else {
          out.push_back('\\');
          out.push_back(e);
        }
    }
  }
  return out;
}

}  // namespace scholex::python::detail
