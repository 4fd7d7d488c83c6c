// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace scholex::python {

/// 1-based line, 0-based byte column (the CPython `ast` convention).
struct Position {
  int line = 1;
  int column = 0;

  friend auto operator<=>(const Position&, const Position&) = default;
};

struct Span {
  Position begin;
  Position end;

  friend bool operator==(const Span&, const Span&) = default;
};

enum class NodeKind {
  Module,
  Assign,
  Call,
  Attribute,
  Name,
  Constant,
  Import,
  ImportFrom,
  FunctionDef,
  Expr,
  Other,
};

/// One node of a script's structural tree.
///
/// Interior nodes keep source order in `children`. Syntax the CPython
/// tree stores in named fields is flattened with small wrapper nodes of
/// kind Other ("body", "orelse", "arguments", "keyword", ...) so the tree
/// stays a plain ordered n-ary tree. Leaves carry token text: identifiers,
/// literal values, operator spellings, and the keyword of bare
/// statements (`pass`, `return`). An Attribute node has two children,
/// the receiver expression and an Attribute leaf holding the member name.
struct TreeNode {
  NodeKind kind = NodeKind::Other;
  std::string other_kind;  ///< construct name when kind == Other
  std::vector<TreeNode> children;
  Span span;
  std::optional<std::string> text;
  bool string_literal = false;  ///< Constant built from str/bytes literals

  bool is_leaf() const { return children.empty(); }
  bool is(std::string_view other) const {
    return kind == NodeKind::Other && other_kind == other;
  }
  /// "Assign", "Call", ..., or the Other construct name.
  std::string label() const;
  /// First child with the given Other label, if any.
  const TreeNode* child(std::string_view other) const;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

const char* to_string(NodeKind kind);

struct ScriptTree {
  TreeNode root;
  std::string source_path;
  int line_count = 0;
  bool lossy_decoded = false;  ///< source bytes were not valid UTF-8
};

struct ParseFailure {
  std::string source_path;
  int line = 0;
  int column = 0;
  std::string message;
};

using ParseResult = std::variant<ScriptTree, ParseFailure>;

/// Parses Python 3 source. Comments and separators do not appear in the
/// tree. `match` statements keep their subject, guards and bodies, with
/// each case pattern kept as a single "pattern" leaf. An irrecoverable
/// syntax error yields a ParseFailure; nothing is thrown.
ParseResult parse_script(std::string_view source, std::string_view path);

/// Parses a single expression (used for f-string replacement fields).
ParseResult parse_expression(std::string_view source, Position origin);

struct Leaf {
  std::string kind;  ///< node label, e.g. "Name", "Constant", "Attribute"
  std::string text;
  Span span;

  friend bool operator==(const Leaf&, const Leaf&) = default;
};

/// Depth-first, left-to-right leaves (the root itself is never a leaf).
std::vector<Leaf> collect_leaves(const ScriptTree& tree);

/// Debug rendering, one node per line, two spaces per depth.
std::string dump(const TreeNode& node);

nlohmann::json to_json(const TreeNode& node);

}  // namespace scholex::python
