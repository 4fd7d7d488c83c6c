// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scholex/python_ast.hpp"

namespace scholex::python::detail {

enum class Tok { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok type = Tok::End;
  std::string text;  ///< verbatim source text
  Position begin;
  Position end;
  // String tokens only.
  std::string prefix;     ///< lower-cased prefix letters, e.g. "rb", "f"
  std::string body;       ///< raw text between the quotes
  Position body_begin;    ///< position of the first body character
};

struct SyntaxError : std::runtime_error {
  SyntaxError(Position p, const std::string& message)
      : std::runtime_error(message), where(p) {}
  Position where;
};

/// Tokenizes a whole module. In expression mode no INDENT/DEDENT/NEWLINE
/// tokens are produced.
std::vector<Token> tokenize(std::string_view source, Position origin, bool expression_mode);

/// Decodes escape sequences of a non-raw string body.
std::string decode_escapes(std::string_view body, bool is_bytes, Position where);

bool is_keyword(std::string_view word);

}  // namespace scholex::python::detail
