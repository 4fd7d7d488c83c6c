// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scholex/archive.hpp"
#include "scholex/http.hpp"

namespace scholex::harvester {

enum class RelationKind { IsVersionOf, Cites, IsSupplementTo, Other };
enum class IdScheme { Doi, Url, Other };

struct RelationEntry {
  RelationKind kind = RelationKind::Other;
  std::string kind_text;  ///< verbatim API relation string
  std::string identifier;
  IdScheme scheme = IdScheme::Other;
  std::string scheme_text;

  friend bool operator==(const RelationEntry&, const RelationEntry&) = default;
};

RelationKind parse_relation_kind(std::string_view text);

struct PackageFile {
  std::string filename;
  std::string url;
  std::uint64_t size_bytes = 0;
  std::string checksum;  ///< "md5:<hex>" as reported, may be empty

  friend bool operator==(const PackageFile&, const PackageFile&) = default;
};

struct PackageRecord {
  std::string deposit_id;
  std::string doi;
  std::optional<std::string> concept_doi;
  std::string title;
  std::optional<std::string> description;
  std::uint64_t size_bytes = 0;
  std::vector<RelationEntry> relations;
  std::vector<PackageFile> files;
  std::optional<std::string> code_host_url;
  std::optional<std::vector<std::string>> languages;

  friend bool operator==(const PackageRecord&, const PackageRecord&) = default;
};

struct HarvestPage {
  std::vector<PackageRecord> records;
  std::optional<std::string> next_cursor;
  std::optional<std::int64_t> total_hint;
  std::size_t skipped = 0;  ///< malformed records dropped from this page
};

struct HarvestQuery {
  std::string base_url = "https://zenodo.org/api";
  std::string resource_type = "software";
  std::string text;  ///< free-text `q`, may be empty
  int page_size = 25;
};

/// Builds the first-page URL for a query.
std::string first_page_url(const HarvestQuery& query);

/// Parses one deposit in the Zenodo records shape. nullopt when the
/// record has no id or no syntactically valid DOI.
std::optional<PackageRecord> parse_record(const nlohmann::json& hit);

/// Parses a whole page. Throws MalformedResponse when the page itself is
/// not a records response.
HarvestPage parse_page(const nlohmann::json& page);

/// One page of deposits. `cursor` is the opaque next-page link of the
/// previous page.
HarvestPage list_deposits(http::Client& client, const HarvestQuery& query,
                          const std::optional<std::string>& cursor);

enum class FilterReason { Kept, TooLarge, NoCodeHost };

const char* to_string(FilterReason reason);

struct FilterLimits {
  std::uint64_t size_limit_bytes = 400'000'000;  // 400 MB, decimal
  bool require_code_host = false;
};

struct FilterDecision {
  bool keep = true;
  FilterReason reason = FilterReason::Kept;
};

/// Drops a deposit strictly larger than the limit, or one without a
/// code-host URL when that is required.
FilterDecision filter_package(const PackageRecord& record, const FilterLimits& limits);

struct ManifestFile {
  std::string filename;
  std::uint64_t size_bytes = 0;
  std::string sha256;
  bool extracted = false;  ///< was an archive, unpacked into the tree
};

struct Manifest {
  std::string deposit_id;
  std::string doi;
  std::filesystem::path tree;  ///< absolute extraction directory
  std::string root;            ///< package root relative to `tree`
  std::vector<ManifestFile> files;
  std::vector<std::string> paths;  ///< relative to `tree`, sorted

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j, const std::filesystem::path& tree);
};

/// Per-deposit directory: <workdir>/<doi-slug>.
std::filesystem::path deposit_dir(const std::filesystem::path& workdir,
                                  const PackageRecord& record);

/// Downloads the deposit files, verifies reported md5 checksums, unpacks
/// zip / tar.gz archives into <deposit_dir>/tree and writes manifest.json.
/// A present manifest short-circuits the whole operation. On failure the
/// partial deposit directory is removed.
Manifest fetch_package_archive(http::Client& client, const PackageRecord& record,
                               const std::filesystem::path& workdir,
                               const archive::Limits& limits = {});

struct CodeHostConfig {
  std::string api_base = "https://api.github.com";
  std::optional<std::string> token;
};

struct CodeHostInfo {
  std::string url;
  std::vector<std::string> languages;
  bool languages_failed = false;
};

/// "https://github.com/o/r/tree/v1" -> "https://github.com/o/r".
std::optional<std::string> normalize_code_host_url(std::string_view url);

/// Languages ordered by byte count descending, ties by name.
std::vector<std::string> order_languages(const nlohmann::json& language_bytes);

/// Code-host URL from the relations, else from `readme_text`; languages
/// from the code host's languages endpoint. A failed languages fetch
/// still returns the URL.
std::optional<CodeHostInfo> resolve_code_host(http::Client& client,
                                              const CodeHostConfig& config,
                                              const PackageRecord& record,
                                              const std::optional<std::string>& readme_text);

nlohmann::json to_json(const PackageRecord& record);
PackageRecord record_from_json(const nlohmann::json& j);

}  // namespace scholex::harvester
