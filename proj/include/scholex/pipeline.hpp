// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scholex/http.hpp"
#include "scholex/scholarly.hpp"

namespace scholex::pipeline {

/// Run configuration. The file format is one `key = value` per line;
/// `#` starts a comment. Relative paths are resolved against the
/// directory of the config file.
struct PipelineConfig {
  std::string repository_api = "https://zenodo.org/api";
  std::string repository_query;
  std::string resource_type = "software";
  int page_size = 25;
  std::string code_host_api = "https://api.github.com";
  std::optional<std::string> code_host_token;
  std::string oa_resolver = "https://api.unpaywall.org";
  std::string oa_email;
  std::string graph_endpoint;  ///< empty: write N-Triples files only
  std::optional<std::string> graph_token;
  std::string graph_base_iri = "https://w3id.org/scholex";
  std::filesystem::path cache_dir = ".scholex-cache";
  std::filesystem::path output_dir = "scholex-out";
  std::optional<std::filesystem::path> registry;
  std::uint64_t size_limit_bytes = 400'000'000;
  bool require_code_host = true;
  int workers = 4;
  std::size_t match_threshold = 1;
  std::string pdf_converter = "pdftotext -q - -";
  double requests_per_second = 2.0;
  int http_timeout_seconds = 60;
  bool dry_run = false;
  std::size_t limit = 0;  ///< 0: no limit
  bool resume = false;
  bool force = false;

  /// Throws Error(Config).
  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses a config file, then applies SCHOLEX_CACHE_DIR, SCHOLEX_OA_EMAIL,
/// SCHOLEX_GRAPH_TOKEN and SCHOLEX_CODEHOST_TOKEN from the environment.
/// Throws Error(Config).
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
void apply_environment(PipelineConfig& config);

struct RunReport {
  std::uint64_t packages_seen = 0;
  std::uint64_t packages_kept = 0;
  std::uint64_t packages_with_code_host = 0;
  std::uint64_t article_links_explicit = 0;
  std::uint64_t article_links_readme = 0;
  std::uint64_t article_links_total = 0;
  std::uint64_t python_packages_linked = 0;
  std::uint64_t scripts_discovered = 0;
  std::uint64_t scripts_parsed = 0;
  std::uint64_t scripts_failed = 0;
  std::uint64_t packages_scholarly = 0;
  std::uint64_t graphs_ingested = 0;  ///< packages with at least one ingested graph
  std::uint64_t dois_unparseable = 0;
  std::uint64_t records_malformed = 0;
  std::uint64_t fulltext_unavailable = 0;
  std::uint64_t packages_failed = 0;

  RunReport& operator+=(const RunReport& other);
  friend bool operator==(const RunReport&, const RunReport&) = default;

  /// Violated arithmetic invariants, empty when consistent.
  std::vector<std::string> invariant_violations() const;

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
  /// Aligned text table with the statistics rows of the paper's corpus
  /// table plus the artifact's own counters.
  std::string to_table() const;
};

/// What happened to one package.
struct PackageOutcome {
  std::string deposit_id;
  std::string doi;
  RunReport counters;
  std::string stage;  ///< last stage reached
  std::optional<std::string> error;

  nlohmann::json to_json() const;
  static PackageOutcome from_json(const nlohmann::json& j);
};

/// Append-only JSON-lines log of finished packages, used by --resume and
/// `scholex report`. The latest entry per DOI wins.
class PackageLedger {
 public:
  /// Throws Error(LedgerCorrupt).
  explicit PackageLedger(std::filesystem::path path);

  const std::map<std::string, PackageOutcome>& entries() const { return entries_; }
  void append(const PackageOutcome& outcome);
  RunReport aggregate() const;

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
  std::map<std::string, PackageOutcome> entries_;
};

/// Replaceable collaborators, for tests.
struct Services {
  std::shared_ptr<http::Transport> transport;  ///< default: curl
  http::Sleeper sleeper;                       ///< default: real sleep
  std::shared_ptr<scholarly::TextExtractor> extractor;  ///< default: pdf_converter
  std::optional<http::RetryPolicy> retry;
};

struct RunResult {
  RunReport report;
  std::size_t network_calls = 0;
  int exit_code = 0;  ///< 0 ok, 3 finished with package failures
  std::vector<PackageOutcome> outcomes;  ///< packages processed in this run
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitFatal = 2;
inline constexpr int kExitPackageFailures = 3;

/// Runs harvest, filter, analysis, matching and graph output. Writes
/// run_report.json and run_report.txt to the output directory. Throws
/// Error(Config) for an invalid config and Error(Io | Network | ...) for
/// fatal startup failures (unwritable cache, unreachable repository).
RunResult run_pipeline(const PipelineConfig& config, Services services = {});

std::filesystem::path package_ledger_path(const PipelineConfig& config);
std::filesystem::path ingest_ledger_path(const PipelineConfig& config);

}  // namespace scholex::pipeline
