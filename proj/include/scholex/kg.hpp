// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scholex/dataflow.hpp"
#include "scholex/http.hpp"
#include "scholex/metadata.hpp"
#include "scholex/scholarly.hpp"

namespace scholex::kg {

inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kRdfsLabel = "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr std::string_view kXsdInteger = "http://www.w3.org/2001/XMLSchema#integer";
inline constexpr std::string_view kXsdAnyUri = "http://www.w3.org/2001/XMLSchema#anyURI";

inline constexpr std::string_view kDefaultBase = "https://w3id.org/scholex";

struct NodeRef {
  enum class Kind { Iri, Literal };

  Kind kind = Kind::Iri;
  std::string value;
  std::optional<std::string> datatype;  ///< literals only

  static NodeRef iri(std::string value) { return {Kind::Iri, std::move(value), std::nullopt}; }
  static NodeRef literal(std::string value, std::optional<std::string> datatype = std::nullopt) {
    return {Kind::Literal, std::move(value), std::move(datatype)};
  }
  bool is_iri() const { return kind == Kind::Iri; }

  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

struct KnowledgeTriple {
  NodeRef subject;
  NodeRef predicate;
  NodeRef object;

  friend auto operator<=>(const KnowledgeTriple&, const KnowledgeTriple&) = default;
};

/// IRIs minted under one base, e.g. "https://w3id.org/scholex".
class Vocabulary {
 public:
  explicit Vocabulary(std::string base = std::string(kDefaultBase));

  const std::string& base() const { return base_; }
  std::string term(std::string_view name) const;  ///< {base}/vocab/{name}
  std::string paper(std::string_view doi) const;
  std::string software(std::string_view doi) const;
  std::string contribution(std::string_view paper_doi, std::string_view software_doi) const;
  std::string concept_term(std::string_view text) const;  ///< {base}/term/{url-encoded}

  /// Predicate names: hasContribution, usesMethod, usesData, hasSupplement,
  /// hasTitle, hasDescription, usesLanguage, hasCodeRepository, hasDoi,
  /// matchedTermCount. Classes: Paper, Contribution, Software, Method,
  /// Dataset.
  static const std::vector<std::string>& predicate_names();
  static const std::vector<std::string>& class_names();

 private:
  std::string base_;
};

struct ContributionGraph {
  std::string package_doi;
  std::string article_doi;
  NodeRef paper_node;
  NodeRef contribution_node;
  NodeRef software_node;
  std::vector<KnowledgeTriple> triples;  ///< sorted, unique
};

struct GraphInputs {
  std::string package_doi;
  const metadata::PackageMetadata* metadata = nullptr;
  std::optional<std::string> code_host_url;
  metadata::ArticleLink link;
  const scholarly::TermMatchReport* report = nullptr;
  const std::vector<analysis::DataflowRecord>* records = nullptr;
};

/// Throws Error(NotScholarly) when the report has no matched term.
ContributionGraph build_contribution_graph(const GraphInputs& in, const Vocabulary& vocab);

/// Canonical N-Triples: sorted unique lines, each ending " .\n".
/// Throws Error(InvalidIri).
std::string serialize_ntriples(const std::vector<KnowledgeTriple>& triples);

bool is_valid_iri(std::string_view iri);
std::string escape_literal(std::string_view value);

enum class IngestStatus { Ingested, DryRunWritten };

const char* to_string(IngestStatus s);

struct IngestionReceipt {
  std::string endpoint;
  std::map<std::string, std::string> created_ids;  ///< node IRI -> remote id
  IngestStatus status = IngestStatus::DryRunWritten;
  std::string graph_hash;
  bool replayed = false;

  nlohmann::json to_json() const;
  static IngestionReceipt from_json(const nlohmann::json& j);
};

/// Append-only JSON-lines record of completed ingestions, keyed by
/// (package DOI, article DOI). Safe to share between threads and
/// processes.
class IngestLedger {
 public:
  struct Entry {
    std::string package_doi;
    std::string article_doi;
    IngestionReceipt receipt;
  };

  /// Throws Error(LedgerCorrupt) on a malformed complete line. A final
  /// line without a newline (a torn write) is ignored.
  explicit IngestLedger(std::filesystem::path path);

  std::optional<Entry> find(const std::string& package_doi, const std::string& article_doi) const;
  void append(const Entry& entry);
  const std::filesystem::path& path() const { return path_; }
  /// Serializes ingestion of one key across threads.
  std::shared_ptr<std::mutex> key_mutex(const std::string& package_doi, const std::string& article_doi);

 private:
  static std::string key(const std::string& package_doi, const std::string& article_doi);

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> latest_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_mutexes_;
};

struct SinkConfig {
  enum class Mode { Http, File };

  Mode mode = Mode::File;
  std::string base_url;                ///< HTTP mode
  std::optional<std::string> token;    ///< bearer token, HTTP mode
  std::filesystem::path output_dir;    ///< file mode
};

/// Writes or posts the graph. A ledger entry with the same key and graph
/// hash is replayed without side effects; a different hash raises
/// Error(LedgerConflict) unless `force` is set.
IngestionReceipt ingest(const ContributionGraph& graph, const SinkConfig& sink, http::Client* client,
                        IngestLedger& ledger, bool force = false);

std::filesystem::path ntriples_path(const SinkConfig& sink, const ContributionGraph& graph);

}  // namespace scholex::kg
