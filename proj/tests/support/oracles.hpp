// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations used only by tests. Written against the
// documented contracts, without reusing library code.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

// ---- straight-line def-use ---------------------------------------------------

enum class StmtKind {
  Source,     // x = pd.read_csv('dK.csv')
  Copy,       // x = y
  Call,       // x = f(y) | x = f(y, z)
  BinOp,      // x = y + z
  Constant,   // x = 0
  MethodFit,  // x.fit(y)
  Sink,       // y.to_csv('oK.csv')
};

struct Stmt {
  StmtKind kind;
  std::string target;             // empty for Sink
  std::vector<std::string> uses;  // variables read, in source order
  std::string callee;             // Call only
  int k = 0;                      // file index for Source/Sink
};

using FlowTuple = std::tuple<std::string, std::string, std::string>;

std::vector<Stmt> generate_script(std::mt19937_64& rng, int max_statements);
std::string render(const std::vector<Stmt>& script);

/// Brute force: for each definition, asks backwards whether each used
/// variable holds source-derived data at that point.
std::set<FlowTuple> def_use_flows(const std::vector<Stmt>& script);

/// Variables holding source-derived data after the last statement.
std::set<std::string> tainted_at_end(const std::vector<Stmt>& script);

// ---- matcher -------------------------------------------------------------

std::size_t naive_count(const std::string& text, const std::string& term);

struct NaiveReport {
  std::vector<std::pair<std::string, std::size_t>> matched;
  std::vector<std::string> unmatched;
  bool scholarly = false;
};

NaiveReport naive_match(const std::vector<std::string>& terms, const std::string& text,
                        std::size_t threshold);

// ---- N-Triples ---------------------------------------------------------------

struct Term {
  bool iri = true;
  std::string value;
  std::optional<std::string> datatype;

  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Triple {
  Term s, p, o;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Line-based N-Triples reader (IRIs and literals only). Throws
/// std::runtime_error on malformed input.
std::vector<Triple> read_ntriples(const std::string& text);

}  // namespace oracle
