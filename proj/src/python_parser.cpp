// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <functional>
#include <sstream>

#include "python_lexer.hpp"
#include "scholex/python_ast.hpp"
#include "scholex/util.hpp"

namespace scholex::python {
namespace {

using detail::SyntaxError;
using detail::Tok;
using detail::Token;

TreeNode node(NodeKind kind, Span span, std::vector<TreeNode> children = {}) {
  TreeNode n;
  n.kind = kind;
  n.span = span;
  n.children = std::move(children);
  return n;
}

TreeNode other(std::string name, Span span, std::vector<TreeNode> children = {}) {
  TreeNode n = node(NodeKind::Other, span, std::move(children));
  n.other_kind = std::move(name);
  return n;
}

TreeNode leaf(NodeKind kind, std::string other_name, std::string text, Span span) {
  TreeNode n = node(kind, span);
  n.other_kind = std::move(other_name);
  n.text = std::move(text);
  return n;
}

TreeNode op_leaf(std::string text, Span span) {
  return leaf(NodeKind::Other, "Operator", std::move(text), span);
}

TreeNode identifier(const Token& t) {
  return leaf(NodeKind::Other, "identifier", t.text, {t.begin, t.end});
}

Span cover(const std::vector<TreeNode>& nodes) {
  return {nodes.front().span.begin, nodes.back().span.end};
}

TreeNode wrap(std::string name, std::vector<TreeNode> children) {
  Span s = cover(children);
  return other(std::move(name), s, std::move(children));
}

Position advance_position(Position p, std::string_view text) {
  for (char c : text) {
    if (c == '\n') {
      ++p.line;
      p.column = 0;
    } else {
      ++p.column;
    }
  }
  return p;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  TreeNode parse_module() {
    std::vector<TreeNode> body;
    while (peek().type != Tok::End) {
      if (peek().type == Tok::Newline) {
        advance();
        continue;
      }
      if (peek().type == Tok::Indent) fail("unexpected indent");
      parse_statement(body);
    }
    Position end = toks_.back().end;
    return node(NodeKind::Module, {{1, 0}, end}, std::move(body));
  }

  TreeNode parse_expression_only() {
    TreeNode e = at_kw("yield") ? yield_expr() : star_expressions();
    if (peek().type != Tok::End) fail("invalid syntax");
    return e;
  }

 private:
  // ---- token helpers -------------------------------------------------
  const Token& peek(std::size_t k = 0) const {
    std::size_t at = std::min(i_ + k, toks_.size() - 1);
    return toks_[at];
  }
  const Token& advance() {
    const Token& t = toks_[i_];
    if (i_ + 1 < toks_.size()) ++i_;
    last_end_ = t.end;
    return t;
  }
  bool at_op(std::string_view op, std::size_t k = 0) const {
    return peek(k).type == Tok::Op && peek(k).text == op;
  }
  bool at_kw(std::string_view kw, std::size_t k = 0) const {
    return peek(k).type == Tok::Name && peek(k).text == kw;
  }
  bool at_identifier(std::size_t k = 0) const {
    return peek(k).type == Tok::Name && !detail::is_keyword(peek(k).text);
  }
  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError(peek().begin, message);
  }
  const Token& expect_op(std::string_view op) {
    if (!at_op(op)) fail("expected '" + std::string(op) + "'");
    return advance();
  }
  const Token& expect_kw(std::string_view kw) {
    if (!at_kw(kw)) fail("expected '" + std::string(kw) + "'");
    return advance();
  }
  const Token& expect_identifier() {
    if (!at_identifier()) fail("expected name");
    return advance();
  }
  void expect_newline() {
    if (peek().type == Tok::End) return;
    if (peek().type != Tok::Newline) fail("invalid syntax");
    advance();
  }

  bool starts_expression(std::size_t k = 0) const {
    const Token& t = peek(k);
    switch (t.type) {
      case Tok::Number:
      case Tok::String:
        return true;
      case Tok::Name:
        if (!detail::is_keyword(t.text)) return true;
        return t.text == "not" || t.text == "lambda" || t.text == "await" ||
               t.text == "True" || t.text == "False" || t.text == "None";
      case Tok::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" ||
               t.text == "+" || t.text == "~" || t.text == "..." || t.text == "*";
      default:
        return false;
    }
  }

  // ---- statements ----------------------------------------------------
  void parse_statement(std::vector<TreeNode>& out) {
    if (at_op("@")) {
      out.push_back(decorated());
      return;
    }
    if (at_kw("def")) { out.push_back(funcdef({}, false)); return; }
    if (at_kw("class")) { out.push_back(classdef({})); return; }
    if (at_kw("if")) { out.push_back(if_stmt()); return; }
    if (at_kw("while")) { out.push_back(while_stmt()); return; }
    if (at_kw("for")) { out.push_back(for_stmt(false)); return; }
    if (at_kw("try")) { out.push_back(try_stmt()); return; }
    if (at_kw("with")) { out.push_back(with_stmt(false)); return; }
    if (at_kw("async")) {
      if (at_kw("def", 1)) { out.push_back(funcdef({}, true)); return; }
      if (at_kw("for", 1)) { out.push_back(for_stmt(true)); return; }
      if (at_kw("with", 1)) { out.push_back(with_stmt(true)); return; }
      fail("invalid syntax");
    }
    if (at_kw("match")) {
      if (auto m = try_match()) {
        out.push_back(std::move(*m));
        return;
      }
    }
    simple_statements(out);
  }

  void simple_statements(std::vector<TreeNode>& out) {
    for (;;) {
      out.push_back(simple_statement());
      if (at_op(";")) {
        advance();
        if (peek().type == Tok::Newline || peek().type == Tok::End) break;
        continue;
      }
      break;
    }
    expect_newline();
  }

  TreeNode block() {
    std::vector<TreeNode> body;
    if (peek().type == Tok::Newline) {
      advance();
      if (peek().type != Tok::Indent) fail("expected an indented block");
      advance();
      while (peek().type != Tok::Dedent && peek().type != Tok::End) {
        if (peek().type == Tok::Newline) {
          advance();
          continue;
        }
        parse_statement(body);
      }
      if (peek().type == Tok::Dedent) advance();
    } else {
      simple_statements(body);
    }
    if (body.empty()) fail("expected an indented block");
    return wrap("body", std::move(body));
  }

  TreeNode suite_named(std::string name) {
    TreeNode b = block();
    b.other_kind = std::move(name);
    return b;
  }

  TreeNode simple_statement() {
    const Token& t = peek();
    Span kw_span{t.begin, t.end};
    if (at_kw("pass") || at_kw("break") || at_kw("continue")) {
      std::string word = advance().text;
      std::string name = word == "pass" ? "Pass" : word == "break" ? "Break" : "Continue";
      return leaf(NodeKind::Other, name, word, kw_span);
    }
    if (at_kw("return")) {
      advance();
      if (!starts_expression()) return leaf(NodeKind::Other, "Return", "return", kw_span);
      TreeNode v = star_expressions();
      Span s{kw_span.begin, v.span.end};
      return other("Return", s, {std::move(v)});
    }
    if (at_kw("raise")) {
      advance();
      if (!starts_expression()) return leaf(NodeKind::Other, "Raise", "raise", kw_span);
      std::vector<TreeNode> parts;
      parts.push_back(expression());
      if (at_kw("from")) {
        advance();
        TreeNode cause = expression();
        parts.push_back(wrap("cause", {std::move(cause)}));
      }
      Span s{kw_span.begin, parts.back().span.end};
      return other("Raise", s, std::move(parts));
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      std::string name = advance().text == "global" ? "Global" : "Nonlocal";
      std::vector<TreeNode> names;
      names.push_back(identifier(expect_identifier()));
      while (at_op(",")) {
        advance();
        names.push_back(identifier(expect_identifier()));
      }
      Span s{kw_span.begin, names.back().span.end};
      return other(name, s, std::move(names));
    }
    if (at_kw("del")) {
      advance();
      std::vector<TreeNode> targets;
      targets.push_back(bitwise_or_or_star());
      while (at_op(",")) {
        advance();
        if (!starts_expression()) break;
        targets.push_back(bitwise_or_or_star());
      }
      for (const auto& t2 : targets) validate_target(t2, "delete");
      Span s{kw_span.begin, targets.back().span.end};
      return other("Delete", s, std::move(targets));
    }
    if (at_kw("assert")) {
      advance();
      std::vector<TreeNode> parts;
      parts.push_back(expression());
      if (at_op(",")) {
        advance();
        parts.push_back(expression());
      }
      Span s{kw_span.begin, parts.back().span.end};
      return other("Assert", s, std::move(parts));
    }
    if (at_kw("import")) return import_stmt();
    if (at_kw("from")) return import_from();
    if (at_kw("type") && at_identifier(1) && (at_op("=", 2) || at_op("[", 2))) {
      return type_alias();
    }
    return expression_statement();
  }

  TreeNode type_alias() {
    Position b = advance().begin;
    const Token& name = advance();
    TreeNode target = leaf(NodeKind::Name, "", name.text, {name.begin, name.end});
    if (at_op("[")) skip_brackets();
    expect_op("=");
    TreeNode value = expression();
    Span s{b, value.span.end};
    return other("TypeAlias", s, {std::move(target), std::move(value)});
  }

  void skip_brackets() {
    int depth = 0;
    do {
      if (at_op("[") || at_op("(") || at_op("{")) ++depth;
      else if (at_op("]") || at_op(")") || at_op("}")) --depth;
      if (peek().type == Tok::End) fail("unexpected EOF");
      advance();
    } while (depth > 0);
  }

  std::string dotted_name() {
    std::string name = expect_identifier().text;
    while (at_op(".")) {
      advance();
      name += "." + expect_identifier().text;
    }
    return name;
  }

  TreeNode alias(bool dotted) {
    Position b = peek().begin;
    std::string name = dotted ? dotted_name() : expect_identifier().text;
    Position e = last_end_;
    std::vector<TreeNode> parts;
    parts.push_back(leaf(NodeKind::Other, "identifier", name, {b, e}));
    if (at_kw("as")) {
      advance();
      const Token& as = expect_identifier();
      parts.push_back(leaf(NodeKind::Other, "asname", as.text, {as.begin, as.end}));
    }
    Span s{b, parts.back().span.end};
    return other("alias", s, std::move(parts));
  }

  TreeNode import_stmt() {
    Position b = advance().begin;
    std::vector<TreeNode> names;
    names.push_back(alias(true));
    while (at_op(",")) {
      advance();
      names.push_back(alias(true));
    }
    Span s{b, names.back().span.end};
    return node(NodeKind::Import, s, std::move(names));
  }

  TreeNode import_from() {
    Position b = advance().begin;
    Position mb = peek().begin;
    std::string module;
    while (at_op(".") || at_op("...")) module += advance().text;
    if (!at_kw("import")) module += dotted_name();
    Position me = last_end_;
    expect_kw("import");
    std::vector<TreeNode> parts;
    parts.push_back(leaf(NodeKind::Other, "module", module, {mb, me}));
    if (at_op("*")) {
      const Token& star = advance();
      parts.push_back(other("alias", {star.begin, star.end},
                            {leaf(NodeKind::Other, "identifier", "*", {star.begin, star.end})}));
    } else {
      bool paren = at_op("(");
      if (paren) advance();
      parts.push_back(alias(false));
      while (at_op(",")) {
        advance();
        if (paren && at_op(")")) break;
        parts.push_back(alias(false));
      }
      if (paren) expect_op(")");
    }
    Span s{b, last_end_};
    return node(NodeKind::ImportFrom, s, std::move(parts));
  }

  static bool is_augassign(const Token& t) {
    static const std::vector<std::string> ops = {"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                                 "&=", "|=", "^=", ">>=", "<<=", "**="};
    return t.type == Tok::Op && std::find(ops.begin(), ops.end(), t.text) != ops.end();
  }

  void validate_target(const TreeNode& n, const char* what) const {
    switch (n.kind) {
      case NodeKind::Name:
      case NodeKind::Attribute:
        return;
      default:
        break;
    }
    if (n.is("Subscript")) return;
    if (n.is("Starred")) {
      validate_target(n.children.front(), what);
      return;
    }
    if (n.is("Tuple") || n.is("List")) {
      for (const auto& c : n.children) validate_target(c, what);
      return;
    }
    throw SyntaxError(n.span.begin, std::string("cannot ") + what + " to " + n.label());
  }

  TreeNode yield_or_star_expressions() {
    return at_kw("yield") ? yield_expr() : star_expressions();
  }

  TreeNode expression_statement() {
    Position start = peek().begin;
    TreeNode first = yield_or_star_expressions();
    if (at_op("=")) {
      std::vector<TreeNode> chain;
      chain.push_back(std::move(first));
      while (at_op("=")) {
        advance();
        chain.push_back(yield_or_star_expressions());
      }
      for (std::size_t k = 0; k + 1 < chain.size(); ++k) validate_target(chain[k], "assign");
      return node(NodeKind::Assign, {start, last_end_}, std::move(chain));
    }
    if (is_augassign(peek())) {
      const Token& op = advance();
      if (!(first.kind == NodeKind::Name || first.kind == NodeKind::Attribute ||
            first.is("Subscript"))) {
        throw SyntaxError(first.span.begin, "illegal expression for augmented assignment");
      }
      TreeNode value = yield_or_star_expressions();
      Span s{start, last_end_};
      std::vector<TreeNode> parts;
      parts.push_back(std::move(first));
      parts.push_back(op_leaf(op.text, {op.begin, op.end}));
      parts.push_back(std::move(value));
      return other("AugAssign", s, std::move(parts));
    }
    if (at_op(":")) {
      advance();
      if (!(first.kind == NodeKind::Name || first.kind == NodeKind::Attribute ||
            first.is("Subscript"))) {
        throw SyntaxError(first.span.begin, "illegal target for annotation");
      }
      std::vector<TreeNode> parts;
      parts.push_back(std::move(first));
      parts.push_back(wrap("annotation", {expression()}));
      if (at_op("=")) {
        advance();
        parts.push_back(yield_or_star_expressions());
      }
      return other("AnnAssign", {start, last_end_}, std::move(parts));
    }
    return node(NodeKind::Expr, {start, last_end_}, {std::move(first)});
  }

  TreeNode decorated() {
    std::vector<TreeNode> decorators;
    while (at_op("@")) {
      advance();
      decorators.push_back(named_expression());
      expect_newline();
    }
    TreeNode deco = wrap("decorators", std::move(decorators));
    if (at_kw("def")) return funcdef(std::move(deco), false);
    if (at_kw("async") && at_kw("def", 1)) return funcdef(std::move(deco), true);
    if (at_kw("class")) return classdef(std::move(deco));
    fail("expected function or class after decorator");
  }

  TreeNode funcdef(std::optional<TreeNode> decorators, bool is_async) {
    Position b = decorators ? decorators->span.begin : peek().begin;
    if (is_async) advance();
    expect_kw("def");
    std::vector<TreeNode> parts;
    if (decorators) parts.push_back(std::move(*decorators));
    parts.push_back(identifier(expect_identifier()));
    if (at_op("[")) skip_brackets();  // PEP 695 type parameters
    expect_op("(");
    if (auto args = parameters(")", true)) parts.push_back(std::move(*args));
    expect_op(")");
    if (at_op("->")) {
      advance();
      parts.push_back(wrap("returns", {expression()}));
    }
    expect_op(":");
    parts.push_back(block());
    Span s{b, last_end_};
    if (is_async) return other("AsyncFunctionDef", s, std::move(parts));
    return node(NodeKind::FunctionDef, s, std::move(parts));
  }

  std::optional<TreeNode> parameters(std::string_view close, bool annotations) {
    std::vector<TreeNode> params;
    while (!at_op(close)) {
      const Token& t = peek();
      if (at_op("/")) {
        advance();
        params.push_back(leaf(NodeKind::Other, "Separator", "/", {t.begin, t.end}));
      } else if (at_op("*") || at_op("**")) {
        bool star2 = advance().text == "**";
        if (!star2 && (at_op(",") || at_op(close))) {
          params.push_back(leaf(NodeKind::Other, "Separator", "*", {t.begin, t.end}));
        } else {
          std::vector<TreeNode> parts;
          parts.push_back(identifier(expect_identifier()));
          if (annotations && at_op(":")) {
            advance();
            parts.push_back(wrap("annotation", {star2 ? expression() : star_expression()}));
          }
          Span s{t.begin, last_end_};
          params.push_back(other(star2 ? "kwarg" : "vararg", s, std::move(parts)));
        }
      } else {
        std::vector<TreeNode> parts;
        parts.push_back(identifier(expect_identifier()));
        if (annotations && at_op(":")) {
          advance();
          parts.push_back(wrap("annotation", {expression()}));
        }
        if (at_op("=")) {
          advance();
          parts.push_back(wrap("default", {expression()}));
        }
        Span s{t.begin, last_end_};
        params.push_back(other("arg", s, std::move(parts)));
      }
      if (!at_op(",")) break;
      advance();
    }
    if (params.empty()) return std::nullopt;
    return wrap("arguments", std::move(params));
  }

  TreeNode classdef(std::optional<TreeNode> decorators) {
    Position b = decorators ? decorators->span.begin : peek().begin;
    expect_kw("class");
    std::vector<TreeNode> parts;
    if (decorators) parts.push_back(std::move(*decorators));
    parts.push_back(identifier(expect_identifier()));
    if (at_op("[")) skip_brackets();
    if (at_op("(")) {
      advance();
      auto args = call_arguments();
      expect_op(")");
      if (!args.empty()) parts.push_back(wrap("bases", std::move(args)));
    }
    expect_op(":");
    parts.push_back(block());
    return other("ClassDef", {b, last_end_}, std::move(parts));
  }

  TreeNode if_stmt() {
    Position b = advance().begin;  // 'if' or 'elif'
    std::vector<TreeNode> parts;
    parts.push_back(named_expression());
    expect_op(":");
    parts.push_back(block());
    if (at_kw("elif")) {
      TreeNode nested = if_stmt();
      parts.push_back(wrap("orelse", {std::move(nested)}));
    } else if (at_kw("else")) {
      advance();
      expect_op(":");
      parts.push_back(suite_named("orelse"));
    }
    return other("If", {b, last_end_}, std::move(parts));
  }

  TreeNode while_stmt() {
    Position b = advance().begin;
    std::vector<TreeNode> parts;
    parts.push_back(named_expression());
    expect_op(":");
    parts.push_back(block());
    if (at_kw("else")) {
      advance();
      expect_op(":");
      parts.push_back(suite_named("orelse"));
    }
    return other("While", {b, last_end_}, std::move(parts));
  }

  TreeNode target_list(std::string_view stop_kw) {
    std::vector<TreeNode> items;
    Position b = peek().begin;
    items.push_back(bitwise_or_or_star());
    bool tuple = false;
    while (at_op(",")) {
      tuple = true;
      advance();
      if (at_kw(stop_kw)) break;
      items.push_back(bitwise_or_or_star());
    }
    TreeNode target = tuple ? other("Tuple", {b, last_end_}, std::move(items))
                            : std::move(items.front());
    validate_target(target, "assign");
    return target;
  }

  TreeNode for_stmt(bool is_async) {
    Position b = peek().begin;
    if (is_async) advance();
    expect_kw("for");
    std::vector<TreeNode> parts;
    parts.push_back(target_list("in"));
    expect_kw("in");
    parts.push_back(star_expressions());
    expect_op(":");
    parts.push_back(block());
    if (at_kw("else")) {
      advance();
      expect_op(":");
      parts.push_back(suite_named("orelse"));
    }
    return other(is_async ? "AsyncFor" : "For", {b, last_end_}, std::move(parts));
  }

  TreeNode with_item() {
    TreeNode context = expression();
    std::vector<TreeNode> parts;
    parts.push_back(std::move(context));
    if (at_kw("as")) {
      advance();
      TreeNode target = bitwise_or_or_star();
      validate_target(target, "assign");
      parts.push_back(wrap("as", {std::move(target)}));
    }
    return wrap("withitem", std::move(parts));
  }

  TreeNode with_stmt(bool is_async) {
    Position b = peek().begin;
    if (is_async) advance();
    expect_kw("with");
    std::vector<TreeNode> items;
    bool parsed = false;
    if (at_op("(")) {
      std::size_t save = i_;
      Position save_end = last_end_;
      try {
        advance();
        std::vector<TreeNode> attempt;
        attempt.push_back(with_item());
        while (at_op(",")) {
          advance();
          if (at_op(")")) break;
          attempt.push_back(with_item());
        }
        expect_op(")");
        if (!at_op(":")) throw SyntaxError(peek().begin, "not a parenthesized with");
        items = std::move(attempt);
        parsed = true;
      } catch (const SyntaxError&) {
        i_ = save;
        last_end_ = save_end;
      }
    }
    if (!parsed) {
      items.push_back(with_item());
      while (at_op(",")) {
        advance();
        items.push_back(with_item());
      }
    }
    expect_op(":");
    items.push_back(block());
    return other(is_async ? "AsyncWith" : "With", {b, last_end_}, std::move(items));
  }

  TreeNode try_stmt() {
    Position b = advance().begin;
    expect_op(":");
    std::vector<TreeNode> parts;
    parts.push_back(block());
    bool has_handler = false;
    while (at_kw("except")) {
      has_handler = true;
      Position hb = advance().begin;
      if (at_op("*")) advance();
      std::vector<TreeNode> h;
      if (!at_op(":")) {
        h.push_back(expression());
        if (at_op(",")) {  // except (A, B) written without parentheses
          std::vector<TreeNode> types;
          types.push_back(std::move(h.back()));
          h.pop_back();
          while (at_op(",")) {
            advance();
            types.push_back(expression());
          }
          h.push_back(wrap("Tuple", std::move(types)));
        }
        if (at_kw("as")) {
          advance();
          h.push_back(identifier(expect_identifier()));
        }
      }
      expect_op(":");
      h.push_back(block());
      parts.push_back(other("ExceptHandler", {hb, last_end_}, std::move(h)));
    }
    if (at_kw("else")) {
      if (!has_handler) fail("expected 'except' or 'finally' block");
      advance();
      expect_op(":");
      parts.push_back(suite_named("orelse"));
    }
    bool has_finally = false;
    if (at_kw("finally")) {
      has_finally = true;
      advance();
      expect_op(":");
      parts.push_back(suite_named("finalbody"));
    }
    if (!has_handler && !has_finally) fail("expected 'except' or 'finally' block");
    return other("Try", {b, last_end_}, std::move(parts));
  }

  // `match` is a soft keyword: only a statement when the header parses.
  std::optional<TreeNode> try_match() {
    std::size_t save = i_;
    Position save_end = last_end_;
    Position b = peek().begin;
    TreeNode subject;
    try {
      advance();
      if (!starts_expression() || (at_op("*") && !starts_expression(1))) throw SyntaxError(b, "");
      subject = star_named_expressions();
      expect_op(":");
      if (peek().type != Tok::Newline) throw SyntaxError(b, "");
      advance();
      if (peek().type != Tok::Indent || !at_kw("case", 1)) throw SyntaxError(b, "");
      advance();
    } catch (const SyntaxError&) {
      i_ = save;
      last_end_ = save_end;
      return std::nullopt;
    }
    std::vector<TreeNode> parts;
    parts.push_back(std::move(subject));
    while (at_kw("case")) {
      Position cb = advance().begin;
      Position pb = peek().begin;
      std::string pattern;
      int depth = 0;
      while (!(depth == 0 && (at_op(":") || at_kw("if")))) {
        if (peek().type == Tok::End || peek().type == Tok::Newline) fail("invalid case pattern");
        if (at_op("(") || at_op("[") || at_op("{")) ++depth;
        if (at_op(")") || at_op("]") || at_op("}")) --depth;
        if (!pattern.empty()) pattern.push_back(' ');
        pattern += advance().text;
      }
      if (pattern.empty()) fail("invalid case pattern");
      std::vector<TreeNode> c;
      c.push_back(leaf(NodeKind::Other, "pattern", pattern, {pb, last_end_}));
      if (at_kw("if")) {
        advance();
        c.push_back(wrap("guard", {named_expression()}));
      }
      expect_op(":");
      c.push_back(block());
      parts.push_back(other("match_case", {cb, last_end_}, std::move(c)));
      while (peek().type == Tok::Newline) advance();
    }
    if (peek().type == Tok::Dedent) advance();
    return other("Match", {b, last_end_}, std::move(parts));
  }

  // ---- expressions ---------------------------------------------------
  TreeNode yield_expr() {
    const Token& kw = advance();
    if (at_kw("from")) {
      advance();
      TreeNode v = expression();
      Span s{kw.begin, v.span.end};
      return other("YieldFrom", s, {std::move(v)});
    }
    if (!starts_expression()) return leaf(NodeKind::Other, "Yield", "yield", {kw.begin, kw.end});
    TreeNode v = star_expressions();
    Span s{kw.begin, v.span.end};
    return other("Yield", s, {std::move(v)});
  }

  TreeNode star_expressions() {
    Position b = peek().begin;
    TreeNode first = star_expression();
    if (!at_op(",")) return first;
    std::vector<TreeNode> items;
    items.push_back(std::move(first));
    while (at_op(",")) {
      advance();
      if (!starts_expression()) break;
      items.push_back(star_expression());
    }
    return other("Tuple", {b, last_end_}, std::move(items));
  }

  TreeNode star_named_expressions() {
    Position b = peek().begin;
    TreeNode first = star_named_expression();
    if (!at_op(",")) return first;
    std::vector<TreeNode> items;
    items.push_back(std::move(first));
    while (at_op(",")) {
      advance();
      if (!starts_expression()) break;
      items.push_back(star_named_expression());
    }
    return other("Tuple", {b, last_end_}, std::move(items));
  }

  TreeNode star_expression() {
    if (at_op("*")) {
      const Token& star = advance();
      TreeNode v = bitwise_or();
      Span s{star.begin, v.span.end};
      return other("Starred", s, {std::move(v)});
    }
    return expression();
  }

  TreeNode star_named_expression() {
    if (at_op("*")) {
      const Token& star = advance();
      TreeNode v = bitwise_or();
      Span s{star.begin, v.span.end};
      return other("Starred", s, {std::move(v)});
    }
    return named_expression();
  }

  TreeNode bitwise_or_or_star() {
    if (at_op("*")) {
      const Token& star = advance();
      TreeNode v = bitwise_or();
      Span s{star.begin, v.span.end};
      return other("Starred", s, {std::move(v)});
    }
    return bitwise_or();
  }

  TreeNode named_expression() {
    if (at_identifier() && at_op(":=", 1)) {
      const Token& name = advance();
      advance();
      TreeNode value = expression();
      Span s{name.begin, value.span.end};
      return other("NamedExpr", s,
                   {leaf(NodeKind::Name, "", name.text, {name.begin, name.end}), std::move(value)});
    }
    return expression();
  }

  TreeNode expression() {
    if (at_kw("lambda")) return lambdef();
    Position start = peek().begin;
    TreeNode body = disjunction();
    if (!at_kw("if")) return body;
    advance();
    TreeNode test = disjunction();
    expect_kw("else");
    TreeNode orelse = expression();
    Span s{start, last_end_};
    return other("IfExp", s, {std::move(body), std::move(test), std::move(orelse)});
  }

  TreeNode lambdef() {
    Position b = advance().begin;
    std::vector<TreeNode> parts;
    if (auto args = parameters(":", false)) parts.push_back(std::move(*args));
    expect_op(":");
    parts.push_back(expression());
    return other("Lambda", {b, last_end_}, std::move(parts));
  }

  TreeNode bool_chain(const char* word, TreeNode (Parser::*next)()) {
    Position start = peek().begin;
    TreeNode first = (this->*next)();
    if (!at_kw(word)) return first;
    std::vector<TreeNode> parts;
    parts.push_back(std::move(first));
    while (at_kw(word)) {
      const Token& op = advance();
      parts.push_back(op_leaf(op.text, {op.begin, op.end}));
      parts.push_back((this->*next)());
    }
    return other("BoolOp", {start, last_end_}, std::move(parts));
  }

  TreeNode disjunction() { return bool_chain("or", &Parser::conjunction); }
  TreeNode conjunction() { return bool_chain("and", &Parser::inversion); }

  TreeNode inversion() {
    if (at_kw("not")) {
      const Token& op = advance();
      TreeNode operand = inversion();
      Span s{op.begin, operand.span.end};
      return other("UnaryOp", s, {op_leaf("not", {op.begin, op.end}), std::move(operand)});
    }
    return comparison();
  }

  std::optional<std::string> comparison_operator() {
    static const std::vector<std::string> ops = {"==", "!=", "<", ">", "<=", ">="};
    if (peek().type == Tok::Op && std::find(ops.begin(), ops.end(), peek().text) != ops.end())
      return advance().text;
    if (at_kw("in")) {
      advance();
      return "in";
    }
    if (at_kw("not") && at_kw("in", 1)) {
      advance();
      advance();
      return "not in";
    }
    if (at_kw("is")) {
      advance();
      if (at_kw("not")) {
        advance();
        return "is not";
      }
      return "is";
    }
    return std::nullopt;
  }

  TreeNode comparison() {
    Position start = peek().begin;
    TreeNode first = bitwise_or();
    std::vector<TreeNode> parts;
    parts.push_back(std::move(first));
    for (;;) {
      Position ob = peek().begin;
      auto op = comparison_operator();
      if (!op) break;
      parts.push_back(op_leaf(*op, {ob, last_end_}));
      parts.push_back(bitwise_or());
    }
    if (parts.size() == 1) return std::move(parts.front());
    return other("Compare", {start, last_end_}, std::move(parts));
  }

  TreeNode binary(const std::vector<std::string_view>& ops, TreeNode (Parser::*next)()) {
    Position start = peek().begin;
    TreeNode left = (this->*next)();
    for (;;) {
      bool matched = peek().type == Tok::Op &&
                     std::find(ops.begin(), ops.end(), peek().text) != ops.end();
      if (!matched) return left;
      const Token& op = advance();
      TreeNode right = (this->*next)();
      Span s{start, last_end_};
      std::vector<TreeNode> parts;
      parts.push_back(std::move(left));
      parts.push_back(op_leaf(op.text, {op.begin, op.end}));
      parts.push_back(std::move(right));
      left = other("BinOp", s, std::move(parts));
    }
  }

  TreeNode bitwise_or() { return binary({"|"}, &Parser::bitwise_xor); }
  TreeNode bitwise_xor() { return binary({"^"}, &Parser::bitwise_and); }
  TreeNode bitwise_and() { return binary({"&"}, &Parser::shift_expr); }
  TreeNode shift_expr() { return binary({"<<", ">>"}, &Parser::sum); }
  TreeNode sum() { return binary({"+", "-"}, &Parser::term); }
  TreeNode term() { return binary({"*", "/", "//", "%", "@"}, &Parser::factor); }

  TreeNode factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      const Token& op = advance();
      TreeNode operand = factor();
      Span s{op.begin, operand.span.end};
      return other("UnaryOp", s, {op_leaf(op.text, {op.begin, op.end}), std::move(operand)});
    }
    return power();
  }

  TreeNode power() {
    Position start = peek().begin;
    TreeNode base = await_primary();
    if (!at_op("**")) return base;
    const Token& op = advance();
    TreeNode exponent = factor();
    Span s{start, last_end_};
    std::vector<TreeNode> parts;
    parts.push_back(std::move(base));
    parts.push_back(op_leaf("**", {op.begin, op.end}));
    parts.push_back(std::move(exponent));
    return other("BinOp", s, std::move(parts));
  }

  TreeNode await_primary() {
    if (at_kw("await")) {
      const Token& kw = advance();
      TreeNode v = primary();
      Span s{kw.begin, v.span.end};
      return other("Await", s, {std::move(v)});
    }
    return primary();
  }

  TreeNode primary() {
    Position start = peek().begin;
    TreeNode value = atom();
    for (;;) {
      if (at_op(".")) {
        advance();
        if (peek().type != Tok::Name) fail("invalid syntax");
        const Token& attr = advance();
        Span s{start, attr.end};
        std::vector<TreeNode> parts;
        parts.push_back(std::move(value));
        parts.push_back(leaf(NodeKind::Attribute, "", attr.text, {attr.begin, attr.end}));
        value = node(NodeKind::Attribute, s, std::move(parts));
      } else if (at_op("(")) {
        advance();
        auto args = call_arguments();
        expect_op(")");
        Span s{start, last_end_};
        std::vector<TreeNode> parts;
        parts.push_back(std::move(value));
        for (auto& a : args) parts.push_back(std::move(a));
        value = node(NodeKind::Call, s, std::move(parts));
      } else if (at_op("[")) {
        advance();
        TreeNode index = slices();
        expect_op("]");
        Span s{start, last_end_};
        std::vector<TreeNode> parts;
        parts.push_back(std::move(value));
        parts.push_back(std::move(index));
        value = other("Subscript", s, std::move(parts));
      } else {
        return value;
      }
    }
  }

  std::vector<TreeNode> call_arguments() {
    std::vector<TreeNode> args;
    while (!at_op(")")) {
      const Token& t = peek();
      if (at_op("*")) {
        advance();
        TreeNode v = expression();
        Span s{t.begin, v.span.end};
        args.push_back(other("Starred", s, {std::move(v)}));
      } else if (at_op("**")) {
        advance();
        TreeNode v = expression();
        Span s{t.begin, v.span.end};
        args.push_back(other("kwargs", s, {std::move(v)}));
      } else if (at_identifier() && at_op("=", 1)) {
        TreeNode key = identifier(advance());
        advance();
        TreeNode v = expression();
        Span s{t.begin, v.span.end};
        args.push_back(other("keyword", s, {std::move(key), std::move(v)}));
      } else {
        TreeNode v = named_expression();
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
          std::vector<TreeNode> parts;
          parts.push_back(std::move(v));
          comprehension_clauses(parts);
          Span s = cover(parts);
          v = other("GeneratorExp", s, std::move(parts));
        }
        args.push_back(std::move(v));
      }
      if (!at_op(",")) break;
      advance();
    }
    return args;
  }

  TreeNode slice_item() {
    Position b = peek().begin;
    std::vector<TreeNode> parts;
    if (!at_op(":")) {
      TreeNode lower = at_op("*") ? star_expression() : named_expression();
      if (!at_op(":")) return lower;
      parts.push_back(wrap("lower", {std::move(lower)}));
    }
    advance();  // ':'
    auto ends_part = [&] { return at_op(":") || at_op(",") || at_op("]"); };
    if (!ends_part()) parts.push_back(wrap("upper", {expression()}));
    if (at_op(":")) {
      advance();
      if (!at_op(",") && !at_op("]")) parts.push_back(wrap("step", {expression()}));
    }
    if (parts.empty()) return leaf(NodeKind::Other, "Slice", ":", {b, last_end_});
    return other("Slice", {b, last_end_}, std::move(parts));
  }

  TreeNode slices() {
    Position b = peek().begin;
    TreeNode first = slice_item();
    if (!at_op(",")) return first;
    std::vector<TreeNode> items;
    items.push_back(std::move(first));
    while (at_op(",")) {
      advance();
      if (at_op("]")) break;
      items.push_back(slice_item());
    }
    return other("Tuple", {b, last_end_}, std::move(items));
  }

  void comprehension_clauses(std::vector<TreeNode>& parts) {
    while (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      Position b = peek().begin;
      if (at_kw("async")) advance();
      advance();
      std::vector<TreeNode> c;
      c.push_back(target_list("in"));
      expect_kw("in");
      c.push_back(disjunction());
      while (at_kw("if")) {
        advance();
        c.push_back(disjunction());
      }
      parts.push_back(other("comprehension", {b, last_end_}, std::move(c)));
    }
  }

  bool at_comprehension() const {
    return at_kw("for") || (at_kw("async") && at_kw("for", 1));
  }

  TreeNode atom() {
    const Token& t = peek();
    Span ts{t.begin, t.end};
    switch (t.type) {
      case Tok::Name:
        if (t.text == "True" || t.text == "False" || t.text == "None") {
          advance();
          return leaf(NodeKind::Constant, "", t.text, ts);
        }
        if (detail::is_keyword(t.text)) fail("invalid syntax");
        advance();
        return leaf(NodeKind::Name, "", t.text, ts);
      case Tok::Number:
        advance();
        return leaf(NodeKind::Constant, "", t.text, ts);
      case Tok::String:
        return strings();
      case Tok::Op:
        if (t.text == "...") {
          advance();
          return leaf(NodeKind::Constant, "", "...", ts);
        }
        if (t.text == "(") return paren_atom();
        if (t.text == "[") return list_atom();
        if (t.text == "{") return brace_atom();
        fail("invalid syntax");
      default:
        fail("invalid syntax");
    }
  }

  TreeNode paren_atom() {
    Position b = advance().begin;
    if (at_op(")")) {
      advance();
      return leaf(NodeKind::Other, "Tuple", "()", {b, last_end_});
    }
    if (at_kw("yield")) {
      TreeNode y = yield_expr();
      expect_op(")");
      return y;
    }
    TreeNode first = star_named_expression();
    if (at_comprehension()) {
      std::vector<TreeNode> parts;
      parts.push_back(std::move(first));
      comprehension_clauses(parts);
      expect_op(")");
      return other("GeneratorExp", {b, last_end_}, std::move(parts));
    }
    if (!at_op(",")) {
      expect_op(")");
      return first;
    }
    std::vector<TreeNode> items;
    items.push_back(std::move(first));
    while (at_op(",")) {
      advance();
      if (at_op(")")) break;
      items.push_back(star_named_expression());
    }
    expect_op(")");
    return other("Tuple", {b, last_end_}, std::move(items));
  }

  TreeNode list_atom() {
    Position b = advance().begin;
    if (at_op("]")) {
      advance();
      return leaf(NodeKind::Other, "List", "[]", {b, last_end_});
    }
    TreeNode first = star_named_expression();
    if (at_comprehension()) {
      std::vector<TreeNode> parts;
      parts.push_back(std::move(first));
      comprehension_clauses(parts);
      expect_op("]");
      return other("ListComp", {b, last_end_}, std::move(parts));
    }
    std::vector<TreeNode> items;
    items.push_back(std::move(first));
    while (at_op(",")) {
      advance();
      if (at_op("]")) break;
      items.push_back(star_named_expression());
    }
    expect_op("]");
    return other("List", {b, last_end_}, std::move(items));
  }

  TreeNode dict_entry() {
    if (at_op("**")) {
      const Token& op = advance();
      TreeNode v = bitwise_or();
      Span s{op.begin, v.span.end};
      return other("unpack", s, {std::move(v)});
    }
    TreeNode key = expression();
    expect_op(":");
    TreeNode value = expression();
    return wrap("item", {std::move(key), std::move(value)});
  }

  TreeNode brace_atom() {
    Position b = advance().begin;
    if (at_op("}")) {
      advance();
      return leaf(NodeKind::Other, "Dict", "{}", {b, last_end_});
    }
    bool is_dict = at_op("**");
    TreeNode first;
    if (is_dict) {
      first = dict_entry();
    } else {
      TreeNode key = star_named_expression();
      if (at_op(":")) {
        advance();
        TreeNode value = expression();
        is_dict = true;
        if (at_comprehension()) {
          std::vector<TreeNode> parts;
          parts.push_back(std::move(key));
          parts.push_back(std::move(value));
          comprehension_clauses(parts);
          expect_op("}");
          return other("DictComp", {b, last_end_}, std::move(parts));
        }
        first = wrap("item", {std::move(key), std::move(value)});
      } else {
        if (at_comprehension()) {
          std::vector<TreeNode> parts;
          parts.push_back(std::move(key));
          comprehension_clauses(parts);
          expect_op("}");
          return other("SetComp", {b, last_end_}, std::move(parts));
        }
        first = std::move(key);
      }
    }
    std::vector<TreeNode> items;
    items.push_back(std::move(first));
    while (at_op(",")) {
      advance();
      if (at_op("}")) break;
      items.push_back(is_dict ? dict_entry() : star_named_expression());
    }
    expect_op("}");
    return other(is_dict ? "Dict" : "Set", {b, last_end_}, std::move(items));
  }

  // ---- string literals -----------------------------------------------
  TreeNode strings() {
    std::vector<const Token*> parts;
    while (peek().type == Tok::String) parts.push_back(&advance());
    Span s{parts.front()->begin, parts.back()->end};
    bool any_f = false, any_bytes = false, any_str = false;
    for (const Token* t : parts) {
      bool bytes = t->prefix.find('b') != std::string::npos;
      any_bytes |= bytes;
      any_str |= !bytes;
      any_f |= t->prefix.find('f') != std::string::npos;
    }
    if (any_bytes && any_str) {
      throw SyntaxError(s.begin, "cannot mix bytes and nonbytes literals");
    }
    if (!any_f) {
      std::string value;
      for (const Token* t : parts) value += literal_value(*t, t->body, t->body_begin);
      TreeNode c = leaf(NodeKind::Constant, "", std::move(value), s);
      c.string_literal = true;
      return c;
    }
    std::vector<TreeNode> pieces;
    std::string pending;
    Span pending_span{};
    bool has_pending = false;
    auto flush = [&] {
      if (!has_pending) return;
      TreeNode c = leaf(NodeKind::Constant, "", pending, pending_span);
      c.string_literal = true;
      pieces.push_back(std::move(c));
      pending.clear();
      has_pending = false;
    };
    auto add_literal = [&](std::string text, Span where) {
      if (text.empty()) return;
      if (!has_pending) pending_span.begin = where.begin;
      pending_span.end = where.end;
      pending += text;
      has_pending = true;
    };
    for (const Token* t : parts) {
      if (t->prefix.find('f') == std::string::npos) {
        add_literal(literal_value(*t, t->body, t->body_begin), {t->begin, t->end});
        continue;
      }
      fstring_pieces(*t, t->body, t->body_begin, add_literal, flush, pieces);
    }
    flush();
    if (pieces.empty()) {
      TreeNode c = leaf(NodeKind::Constant, "", "", s);
      c.string_literal = true;
      return c;
    }
    return other("JoinedStr", s, std::move(pieces));
  }

  static std::string literal_value(const Token& t, std::string_view body, Position where) {
    bool raw = t.prefix.find('r') != std::string::npos;
    bool bytes = t.prefix.find('b') != std::string::npos;
    return raw ? std::string(body) : detail::decode_escapes(body, bytes, where);
  }

  template <typename AddLiteral, typename Flush>
  void fstring_pieces(const Token& t, std::string_view body, Position origin,
                      AddLiteral& add_literal, Flush& flush, std::vector<TreeNode>& pieces) {
    std::size_t i = 0;
    std::string literal;
    Position literal_begin = origin;
    auto emit_literal = [&](std::size_t upto) {
      if (!literal.empty()) {
        std::string value = literal_value(t, literal, literal_begin);
        add_literal(std::move(value),
                    Span{literal_begin, advance_position(origin, body.substr(0, upto))});
      }
      literal.clear();
    };
    while (i < body.size()) {
      char c = body[i];
      if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
        if (literal.empty()) literal_begin = advance_position(origin, body.substr(0, i));
        literal.push_back('{');
        i += 2;
        continue;
      }
      if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
        if (literal.empty()) literal_begin = advance_position(origin, body.substr(0, i));
        literal.push_back('}');
        i += 2;
        continue;
      }
      if (c == '}') throw SyntaxError(advance_position(origin, body.substr(0, i)),
                                      "f-string: single '}' is not allowed");
      if (c != '{') {
        if (literal.empty()) literal_begin = advance_position(origin, body.substr(0, i));
        literal.push_back(c);
        bool raw = t.prefix.find('r') != std::string::npos;
        if (c == '\\' && !raw && i + 2 < body.size() && body[i + 1] == 'N' &&
            body[i + 2] == '{') {
          std::size_t close = body.find('}', i + 3);
          if (close == std::string_view::npos) close = body.size() - 1;
          literal.append(body.substr(i + 1, close - i));
          i = close + 1;
          continue;
        }
        if (c == '\\' && i + 1 < body.size() && body[i + 1] == '\\') literal.push_back(body[++i]);
        ++i;
        continue;
      }
      emit_literal(i);
      flush();
      std::size_t close = 0;
      pieces.push_back(replacement_field(t, body, i, origin, close));
      i = close + 1;
    }
    emit_literal(i);
  }

  TreeNode replacement_field(const Token& t, std::string_view body, std::size_t open,
                             Position origin, std::size_t& close) {
    Position field_begin = advance_position(origin, body.substr(0, open));
    std::size_t k = open + 1;
    int depth = 0;
    std::size_t expr_end = std::string_view::npos;
    while (k < body.size()) {
      char c = body[k];
      if (c == '\'' || c == '"') {
        char q = c;
        bool triple = k + 2 < body.size() && body[k + 1] == q && body[k + 2] == q;
        k += triple ? 3 : 1;
        while (k < body.size()) {
          if (body[k] == '\\') { k += 2; continue; }
          if (body[k] == q && (!triple || (k + 2 < body.size() && body[k + 1] == q && body[k + 2] == q))) {
            k += triple ? 3 : 1;
            break;
          }
          ++k;
        }
        continue;
      }
      if (c == '(' || c == '[' || c == '{') ++depth;
      else if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
      else if (depth == 0 && (c == '}' || c == ':' ||
                              (c == '!' && k + 1 < body.size() && body[k + 1] != '='))) {
        expr_end = k;
        break;
      }
      ++k;
    }
    if (expr_end == std::string_view::npos) {
      throw SyntaxError(field_begin, "f-string: expecting '}'");
    }
    std::string_view expr_text = body.substr(open + 1, expr_end - open - 1);
    // Self-documenting "{x=}".
    std::string_view trimmed = expr_text;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
      trimmed.remove_suffix(1);
    if (!trimmed.empty() && trimmed.back() == '=' &&
        (trimmed.size() < 2 || std::string_view("=!<>").find(trimmed[trimmed.size() - 2]) ==
                                   std::string_view::npos)) {
      expr_text = trimmed.substr(0, trimmed.size() - 1);
    }
    if (std::all_of(expr_text.begin(), expr_text.end(),
                    [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); })) {
      throw SyntaxError(field_begin, "f-string: valid expression required before '}'");
    }
    Position expr_origin = advance_position(origin, body.substr(0, open + 1));
    std::vector<TreeNode> parts;
    parts.push_back(parse_embedded(expr_text, expr_origin));

    k = expr_end;
    if (body[k] == '!') {
      Position cb = advance_position(origin, body.substr(0, k + 1));
      if (k + 1 >= body.size()) throw SyntaxError(cb, "f-string: missing conversion");
      std::string conv(1, body[k + 1]);
      parts.push_back(leaf(NodeKind::Other, "conversion", conv, {cb, {cb.line, cb.column + 1}}));
      k += 2;
    }
    if (k < body.size() && body[k] == ':') {
      std::size_t spec_begin = k + 1;
      int d = 0;
      std::size_t m = spec_begin;
      while (m < body.size()) {
        if (body[m] == '{') ++d;
        else if (body[m] == '}') {
          if (d == 0) break;
          --d;
        }
        ++m;
      }
      if (m >= body.size()) throw SyntaxError(field_begin, "f-string: expecting '}'");
      std::string_view spec = body.substr(spec_begin, m - spec_begin);
      Position spec_origin = advance_position(origin, body.substr(0, spec_begin));
      if (!spec.empty()) {
        std::vector<TreeNode> spec_pieces;
        std::string pending;
        Span pending_span{};
        bool has_pending = false;
        auto add_literal = [&](std::string text, Span where) {
          if (text.empty()) return;
          if (!has_pending) pending_span.begin = where.begin;
          pending_span.end = where.end;
          pending += text;
          has_pending = true;
        };
        auto flush = [&] {
          if (!has_pending) return;
          TreeNode c = leaf(NodeKind::Constant, "", pending, pending_span);
          c.string_literal = true;
          spec_pieces.push_back(std::move(c));
          pending.clear();
          has_pending = false;
        };
        fstring_pieces(t, spec, spec_origin, add_literal, flush, spec_pieces);
        flush();
        if (!spec_pieces.empty()) {
          parts.push_back(wrap("format_spec", {wrap("JoinedStr", std::move(spec_pieces))}));
        }
      }
      k = m;
    }
    if (k >= body.size() || body[k] != '}') throw SyntaxError(field_begin, "f-string: expecting '}'");
    close = k;
    Position field_end = advance_position(origin, body.substr(0, k + 1));
    return other("FormattedValue", {field_begin, field_end}, std::move(parts));
  }

  static TreeNode parse_embedded(std::string_view text, Position origin) {
    auto tokens = detail::tokenize(text, origin, true);
    Parser sub(std::move(tokens));
    return sub.parse_expression_only();
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  Position last_end_{1, 0};
};

void collect(const TreeNode& n, std::vector<Leaf>& out) {
  if (n.is_leaf()) {
    out.push_back({n.label(), n.text.value_or(""), n.span});
    return;
  }
  for (const auto& c : n.children) collect(c, out);
}

void dump_into(const TreeNode& n, int depth, std::ostringstream& os) {
  os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << n.label();
  if (n.text) os << " \"" << *n.text << '"';
  os << " @" << n.span.begin.line << ':' << n.span.begin.column << '\n';
  for (const auto& c : n.children) dump_into(c, depth + 1, os);
}

int count_lines(std::string_view text) {
  if (text.empty()) return 0;
  int lines = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  if (text.back() != '\n') ++lines;
  return lines;
}

}  // namespace

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Module: return "Module";
    case NodeKind::Assign: return "Assign";
    case NodeKind::Call: return "Call";
    case NodeKind::Attribute: return "Attribute";
    case NodeKind::Name: return "Name";
    case NodeKind::Constant: return "Constant";
    case NodeKind::Import: return "Import";
    case NodeKind::ImportFrom: return "ImportFrom";
    case NodeKind::FunctionDef: return "FunctionDef";
    case NodeKind::Expr: return "Expr";
    case NodeKind::Other: return "Other";
  }
  return "Other";
}

std::string TreeNode::label() const {
  return kind == NodeKind::Other ? other_kind : std::string(to_string(kind));
}

const TreeNode* TreeNode::child(std::string_view name) const {
  for (const auto& c : children) {
    if (c.is(name)) return &c;
  }
  return nullptr;
}

ParseResult parse_script(std::string_view source, std::string_view path) {
  auto decoded = decode_utf8_lossy(source);
  std::string_view text = decoded.text;
  // A UTF-8 byte order mark is not part of the program.
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  try {
    Parser parser(detail::tokenize(text, {1, 0}, false));
    ScriptTree tree;
    tree.root = parser.parse_module();
    tree.source_path = std::string(path);
    tree.line_count = count_lines(text);
    tree.lossy_decoded = decoded.lossy;
    return tree;
  } catch (const SyntaxError& e) {
    return ParseFailure{std::string(path), e.where.line, e.where.column, e.what()};
  }
}

ParseResult parse_expression(std::string_view source, Position origin) {
  try {
    Parser parser(detail::tokenize(source, origin, true));
    ScriptTree tree;
    tree.root = parser.parse_expression_only();
    tree.line_count = count_lines(source);
    return tree;
  } catch (const SyntaxError& e) {
    return ParseFailure{"<expression>", e.where.line, e.where.column, e.what()};
  }
}

std::vector<Leaf> collect_leaves(const ScriptTree& tree) {
  std::vector<Leaf> leaves;
  for (const auto& c : tree.root.children) collect(c, leaves);
  return leaves;
}

std::string dump(const TreeNode& node) {
  std::ostringstream os;
  dump_into(node, 0, os);
  return os.str();
}

nlohmann::json to_json(const TreeNode& n) {
  nlohmann::json j{{"kind", n.label()},
                   {"span", {n.span.begin.line, n.span.begin.column, n.span.end.line,
                             n.span.end.column}}};
  if (n.text) j["text"] = *n.text;
  if (!n.children.empty()) {
    auto& children = j["children"] = nlohmann::json::array();
    for (const auto& c : n.children) children.push_back(to_json(c));
  }
  return j;
}

}  // namespace scholex::python
