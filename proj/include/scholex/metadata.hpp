// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scholex::harvester {
struct PackageRecord;
}

namespace scholex::metadata {

enum class Provenance { ExplicitCites, ExplicitIsSupplementTo, ReadmeMined };

const char* to_string(Provenance p);
Provenance provenance_from_string(std::string_view text);

inline bool is_explicit(Provenance p) { return p != Provenance::ReadmeMined; }

struct SourceSpan {
  std::string file;
  std::size_t offset = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

struct ArticleLink {
  std::string doi;
  Provenance provenance = Provenance::ReadmeMined;
  std::optional<SourceSpan> source_span;  ///< README-mined links only

  friend bool operator==(const ArticleLink&, const ArticleLink&) = default;
};

struct RelationLinks {
  std::vector<ArticleLink> links;
  std::size_t ignored = 0;  ///< Cites/IsSupplementTo targets that are not DOIs
  std::optional<std::string> version_group;
};

/// Article links from Cites / IsSupplementTo relations. IsVersionOf only
/// sets the version group.
RelationLinks extract_relation_links(const harvester::PackageRecord& record);

/// DOIs of the package itself; README hits on these are not articles.
struct SelfIdentifiers {
  std::vector<std::string> dois;  ///< package DOI, concept DOI, version group
};

/// DOI literals, resolver URLs and badge URLs in a README, deduplicated
/// (case-insensitively) in first-occurrence order.
std::vector<ArticleLink> extract_readme_links(std::string_view readme_text,
                                              const SelfIdentifiers& self = {},
                                              std::string_view readme_file = "README");

struct PackageMetadata {
  std::string name;
  std::optional<std::string> description;
  std::vector<std::string> languages;
  std::optional<std::string> readme_text;
  std::vector<ArticleLink> article_links;  ///< explicit first, then README
  std::optional<std::string> version_group;
  std::size_t ignored_relation_identifiers = 0;
  std::size_t unparseable_dois = 0;

  std::size_t explicit_link_count() const;
  std::size_t readme_link_count() const;

  nlohmann::json to_json() const;
  static PackageMetadata from_json(const nlohmann::json& j);
};

struct ReadmeFile {
  std::string name;  ///< file name relative to the package root
  std::string text;
};

/// Deposit fields take precedence over the README; explicit links win
/// DOI collisions against README links.
PackageMetadata extract_package_metadata(const harvester::PackageRecord& record,
                                         const std::optional<ReadmeFile>& readme);

/// First README* (case-insensitive) at `root` in lexicographic order.
std::optional<std::filesystem::path> find_readme(const std::filesystem::path& root);

/// Reads and lossily decodes the README at `root`, if any.
std::optional<ReadmeFile> load_readme(const std::filesystem::path& root);

/// First code-hosting repository URL (github.com) mentioned in the text.
std::optional<std::string> find_code_host_url(std::string_view text);

/// First "# Heading" (ATX) or underlined (setext / reST) title.
std::optional<std::string> first_heading(std::string_view readme_text);

/// First prose paragraph after the title; badge-only lines are skipped.
std::optional<std::string> first_paragraph(std::string_view readme_text);

/// Removes HTML tags and collapses whitespace.
std::string strip_html(std::string_view html);

}  // namespace scholex::metadata
