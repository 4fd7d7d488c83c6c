// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scholex/python_ast.hpp"

namespace scholex::analysis {

/// Callee-name lists that give calls a dataflow role. Entries match the
/// last component of a dotted callee, so "read_csv" matches both
/// `pd.read_csv` and `pandas.read_csv`.
struct Registries {
  std::vector<std::string> sources;
  std::vector<std::string> sinks;
  /// Calls that pass taint through without being reported as operations.
  std::vector<std::string> ignored;

  static Registries defaults();
  /// Reads a JSON object with optional "sources", "sinks" and "ignored"
  /// arrays; missing keys keep their defaults. Throws Error(Config).
  static Registries load(const std::filesystem::path& path);
  static Registries from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  bool is_source(std::string_view tail) const;
  bool is_sink(std::string_view tail) const;
  bool is_ignored(std::string_view tail) const;
};

enum class Direction { Input, Output };

const char* to_string(Direction d);

inline constexpr std::string_view kDynamicLabel = "<dynamic>";

struct DatasetRef {
  std::string label;    ///< basename of the literal without its extension
  std::string literal;  ///< the string as written, or "<dynamic>"
  std::string variable;
  Direction direction = Direction::Input;
  python::Span span;
  std::string via;  ///< source or sink callee tail, e.g. "read_csv"

  friend bool operator==(const DatasetRef&, const DatasetRef&) = default;
};

struct OperationRef {
  std::string callee;  ///< dotted name as written, e.g. "svr.fit"
  std::optional<std::string> receiver;
  std::vector<std::string> tainted_args;
  python::Span span;

  friend bool operator==(const OperationRef&, const OperationRef&) = default;
};

struct Flow {
  std::string from;
  std::string via;  ///< operation callee, or "=" for plain assignment
  std::string to;

  friend auto operator<=>(const Flow&, const Flow&) = default;
};

struct DataflowRecord {
  std::string script;
  std::vector<DatasetRef> inputs;
  std::vector<OperationRef> operations;  ///< source order
  std::vector<DatasetRef> outputs;
  std::vector<Flow> flows;  ///< sorted, unique

  bool empty() const { return inputs.empty() && operations.empty() && outputs.empty(); }
  friend bool operator==(const DataflowRecord&, const DataflowRecord&) = default;
};

/// "data/Sample.csv" -> "Sample"; "<dynamic>" stays as is.
std::string dataset_label(std::string_view literal);

DataflowRecord extract_dataflow(const python::ScriptTree& tree, const Registries& registries);

enum class TermRole { Dataset, Source, Operation, Sink };

const char* to_string(TermRole role);

struct Term {
  std::string text;
  TermRole role = TermRole::Operation;

  friend bool operator==(const Term&, const Term&) = default;
};

/// Input dataset labels, source callees, operation callees and sink
/// callees, deduplicated in first-occurrence order.
std::vector<Term> extract_terms(const DataflowRecord& record);

/// Terms of several records, deduplicated across records.
std::vector<Term> merge_terms(const std::vector<DataflowRecord>& records);

nlohmann::json to_json(const DataflowRecord& record);
DataflowRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<Term>& terms);
std::vector<Term> terms_from_json(const nlohmann::json& j);

/// `.py` files below root, as sorted relative paths. Symlinks and hidden
/// directories are skipped.
std::vector<std::filesystem::path> discover_scripts(const std::filesystem::path& root);

struct PackageAnalysis {
  std::size_t scripts_discovered = 0;
  std::size_t scripts_analyzed = 0;
  std::vector<DataflowRecord> records;  ///< one per parsed script
  std::vector<python::ParseFailure> failures;
  std::size_t lossy_decoded = 0;
  std::vector<Term> terms;

  nlohmann::json to_json() const;
  static PackageAnalysis from_json(const nlohmann::json& j);
};

PackageAnalysis analyze_package(const std::filesystem::path& root, const Registries& registries);

}  // namespace scholex::analysis
