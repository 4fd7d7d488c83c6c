// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <functional>
#include <random>

#include "corpus.hpp"
#include "scholex/python_ast.hpp"

using namespace scholex::python;

namespace {

ScriptTree parse_ok(const std::string& src) {
  auto r = parse_script(src, "t.py");
  if (auto* f = std::get_if<ParseFailure>(&r)) {
    FAIL("unexpected parse failure at " << f->line << ":" << f->column << ": " << f->message);
  }
  return std::get<ScriptTree>(r);
}

std::vector<std::pair<std::string, std::string>> leaf_pairs(const ScriptTree& t) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& l : collect_leaves(t)) out.emplace_back(l.kind, l.text);
  return out;
}

void walk(const TreeNode& n, const std::function<void(const TreeNode&, bool)>& f, bool root = true) {
  f(n, root);
  for (const auto& c : n.children) walk(c, f, false);
}

// Random expression text with the Name/Constant tokens it contains, in
// source order.
struct Gen {
  std::mt19937_64 rng;
  std::vector<std::pair<std::string, std::string>> tokens;

  int roll(int hi) { return std::uniform_int_distribution<int>(0, hi)(rng); }

  std::string atom() {
    switch (roll(2)) {
      case 0: {
        std::string n = "v" + std::to_string(roll(9));
        tokens.emplace_back("Name", n);
        return n;
      }
      case 1: {
        std::string n = std::to_string(roll(999));
        tokens.emplace_back("Constant", n);
        return n;
      }
      default: {
        std::string s = "s" + std::to_string(roll(99));
        tokens.emplace_back("Constant", s);
        return "'" + s + "'";
      }
    }
  }

  std::string expr(int depth) {
    if (depth == 0) return atom();
    switch (roll(6)) {
      case 0: {
        std::string l = expr(depth - 1);
        return l + " + " + expr(depth - 1);
      }
      case 1: {
        std::string f = "f" + std::to_string(roll(3));
        tokens.emplace_back("Name", f);
        std::string a = expr(depth - 1);
        return f + "(" + a + ", " + expr(depth - 1) + ")";
      }
      case 2: {
        std::string r = expr(depth - 1);
        return "(" + r + ").attr" + std::to_string(roll(3));
      }
      case 3: {
        std::string v = expr(depth - 1);
        return v + "[" + expr(depth - 1) + "]";
      }
      case 4: {
        std::string a = expr(depth - 1);
        return "[" + a + ", " + expr(depth - 1) + "]";
      }
      case 5: {
        std::string k = expr(depth - 1);
        return "{" + k + ": " + expr(depth - 1) + "}";
      }
      default:
        return "-" + expr(depth - 1);
    }
  }

  std::string statement() {
    switch (roll(2)) {
      case 0: {
        std::string t = "t" + std::to_string(roll(5));
        tokens.emplace_back("Name", t);
        return t + " = " + expr(roll(3)) + "\n";
      }
      case 1:
        return expr(roll(3)) + "\n";
      default: {
        std::string c = expr(1);
        std::string body = expr(2);
        return "if " + c + ":\n    " + body + "\n";
      }
    }
  }
};

}  // namespace

TEST_SUITE("parser") {
  TEST_CASE("minimal assignment") {
    auto t = parse_ok("x = 1");
    CHECK(t.root.kind == NodeKind::Module);
    REQUIRE(t.root.children.size() == 1);
    const auto& assign = t.root.children[0];
    CHECK(assign.kind == NodeKind::Assign);
    REQUIRE(assign.children.size() == 2);
    CHECK(assign.children[0].kind == NodeKind::Name);
    CHECK(assign.children[0].text == "x");
    CHECK(assign.children[1].kind == NodeKind::Constant);
    CHECK(assign.children[1].text == "1");
    CHECK(assign.children[0].span == Span{{1, 0}, {1, 1}});
  }

  TEST_CASE("source call shape") {
    auto t = parse_ok("Samples = pd.read_csv('Sample.csv', header=0)\n");
    const auto& assign = t.root.children.at(0);
    REQUIRE(assign.kind == NodeKind::Assign);
    const auto& call = assign.children.back();
    REQUIRE(call.kind == NodeKind::Call);
    const auto& callee = call.children.at(0);
    CHECK(callee.kind == NodeKind::Attribute);
    CHECK(callee.children.at(0).text == "pd");
    CHECK(callee.children.at(1).text == "read_csv");
    CHECK(call.children.at(1).kind == NodeKind::Constant);
    CHECK(call.children.at(1).text == "Sample.csv");
    CHECK(call.children.at(1).string_literal);
    CHECK(call.children.at(2).is("keyword"));
  }

  TEST_CASE("reference script lines 1, 10 and 16") {
    auto t = parse_ok(fixture::Corpus::svr_script());
    std::vector<const TreeNode*> lines;
    for (const auto& s : t.root.children) {
      if (s.span.begin.line == 1 || s.span.begin.line == 10 || s.span.begin.line == 16) lines.push_back(&s);
    }
    REQUIRE(lines.size() == 3);
    CHECK(lines[0]->kind == NodeKind::Assign);
    CHECK(lines[1]->kind == NodeKind::Assign);
    CHECK(lines[1]->children.back().children.at(0).text == "LinearSVR");
    CHECK(lines[2]->kind == NodeKind::Expr);
    CHECK(lines[2]->children.at(0).children.at(0).children.at(1).text == "to_csv");
  }

  TEST_CASE("syntax errors") {
    auto r = parse_script("def f(:", "bad.py");
    REQUIRE(std::holds_alternative<ParseFailure>(r));
    CHECK(std::get<ParseFailure>(r).line == 1);
    CHECK(std::get<ParseFailure>(r).source_path == "bad.py");

    auto py2 = parse_script("x = 1\nprint \"hello\"\n", "legacy.py");
    REQUIRE(std::holds_alternative<ParseFailure>(py2));
    CHECK(std::get<ParseFailure>(py2).line == 2);

    CHECK(std::holds_alternative<ParseFailure>(parse_script("x = (1,\n", "p.py")));
    CHECK(std::holds_alternative<ParseFailure>(parse_script("if x:\npass\n", "p.py")));
    CHECK(std::holds_alternative<ParseFailure>(parse_script("s = b'a' 'b'\n", "p.py")));
  }

  TEST_CASE("parenthesized operands widen the enclosing span") {
    // Columns as reported by CPython's ast module.
    auto t = parse_ok("(v1).attr0\n");
    const auto& expr = t.root.children.at(0);
    CHECK(expr.span.begin.column == 0);
    CHECK(expr.span.end.column == 10);
    CHECK(expr.children.at(0).span.begin.column == 0);
    CHECK(expr.children.at(0).children.at(0).span.begin.column == 1);

    auto b = parse_ok("z = (a) + (b)\n");
    const auto& binop = b.root.children.at(0).children.at(1);
    CHECK(binop.is("BinOp"));
    CHECK(binop.span.begin.column == 4);
    CHECK(binop.span.end.column == 13);
  }

  TEST_CASE("leaves") {
    CHECK(leaf_pairs(parse_ok("x = 1")) ==
          std::vector<std::pair<std::string, std::string>>{{"Name", "x"}, {"Constant", "1"}});
    auto leaves = leaf_pairs(parse_ok("score.to_csv('score.csv')\n"));
    CHECK(leaves == std::vector<std::pair<std::string, std::string>>{
                        {"Name", "score"}, {"Attribute", "to_csv"}, {"Constant", "score.csv"}});
    CHECK(collect_leaves(parse_ok("")).empty());
    CHECK(collect_leaves(parse_ok("# only a comment\n\n")).empty());
  }

  TEST_CASE("chained assignment keeps targets then one value") {
    auto t = parse_ok("a = b = -3.5\n");
    const auto& assign = t.root.children.at(0);
    REQUIRE(assign.children.size() == 3);
    CHECK(assign.children[0].text == "a");
    CHECK(assign.children[1].text == "b");
    CHECK(assign.children[2].is("UnaryOp"));
  }

  TEST_CASE("modern constructs parse") {
    parse_ok(
        "match cmd:\n"
        "    case [x, *rest] if x > 0:\n"
        "        pass\n"
        "    case _:\n"
        "        match = 3\n"
        "async def g():\n"
        "    async with a as b:\n"
        "        await b\n"
        "    return [y async for y in b]\n"
        "@dec(1)\n"
        "class C(Base, metaclass=M):\n"
        "    x: int = 1\n"
        "    def m(self, /, a, *, k=2, **kw) -> None:\n"
        "        nonlocal_ = (z := 3)\n"
        "        yield from range(k)\n"
        "s = f'{a!r:>{w}}' u'x'\n"
        "t = rb'\\x00' b'y'\n"
        "lam = lambda *a, **k: a\n"
        "try:\n"
        "    pass\n"
        "except* ValueError as e:\n"
        "    raise RuntimeError() from e\n"
        "finally:\n"
        "    del s[1:2, ::3]\n");
  }

  TEST_CASE("decoding") {
    auto bom = parse_ok("\xEF\xBB\xBFx = 1\n");
    CHECK(bom.root.children.at(0).children.at(0).span.begin.column == 0);
    auto r = parse_script("x = 1  # caf\xE9\n", "latin.py");
    REQUIRE(std::holds_alternative<ScriptTree>(r));
    CHECK(std::get<ScriptTree>(r).lossy_decoded);
    CHECK(std::get<ScriptTree>(r).line_count == 1);
  }

  TEST_CASE("determinism") {
    auto src = fixture::Corpus::svr_script();
    CHECK(parse_ok(src).root == parse_ok(src).root);
    CHECK(to_json(parse_ok(src).root) == to_json(parse_ok(src).root));
  }

  TEST_CASE("property: leaf completeness and leaf-only text") {
    Gen gen{std::mt19937_64(424242), {}};
    for (int round = 0; round < 500; ++round) {
      gen.tokens.clear();
      std::string src;
      int n = gen.roll(4) + 1;
      for (int i = 0; i < n; ++i) src += gen.statement();
      auto t = parse_ok(src);
      std::vector<std::pair<std::string, std::string>> got;
      for (const auto& l : collect_leaves(t)) {
        if (l.kind == "Name" || l.kind == "Constant") got.emplace_back(l.kind, l.text);
      }
      INFO(src);
      CHECK(got == gen.tokens);
      walk(t.root, [](const TreeNode& node, bool root) {
        if (root) return;
        CHECK(node.is_leaf() == node.text.has_value());
        if (node.kind == NodeKind::Assign) CHECK(node.children.size() >= 2);
      });
    }
  }
}
