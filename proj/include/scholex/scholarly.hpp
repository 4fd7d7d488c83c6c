// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scholex/http.hpp"

namespace scholex::scholarly {

enum class ExtractionMethod { PlainTextSidecar, ExternalPdfToText };

const char* to_string(ExtractionMethod m);

struct FulltextDocument {
  std::string doi;
  std::string text;
  std::string source_url;
  ExtractionMethod extraction_method = ExtractionMethod::PlainTextSidecar;
};

/// Turns PDF bytes into plain text. Throws Error(ExtractionFailed).
class TextExtractor {
 public:
  virtual ~TextExtractor() = default;
  virtual std::string extract(std::string_view pdf) = 0;
};

/// Runs an external converter: PDF on stdin, UTF-8 text on stdout.
/// A nonzero exit status or empty output is an extraction failure.
class ExternalConverter final : public TextExtractor {
 public:
  /// `command` is split on whitespace; the first word is the executable
  /// (searched on PATH), e.g. "pdftotext -q - -".
  explicit ExternalConverter(std::string command);
  std::string extract(std::string_view pdf) override;

 private:
  std::vector<std::string> argv_;
};

struct ResolverConfig {
  std::string base_url = "https://api.unpaywall.org";
  std::string email;
};

/// Open-access full-text lookup with a per-DOI text cache under
/// `<cache_dir>/fulltext/`. Cached texts and cached "no open-access
/// location" answers are served without network access. Concurrent
/// callers asking for the same DOI share one resolution.
class FulltextResolver {
 public:
  FulltextResolver(http::Client& client, ResolverConfig config, std::filesystem::path cache_dir,
                   std::shared_ptr<TextExtractor> extractor);

  /// Throws Error(NoOpenAccessLocation | ExtractionFailed | Network | ...).
  FulltextDocument resolve(const std::string& doi);

  std::filesystem::path sidecar_path(const std::string& doi) const;

 private:
  FulltextDocument resolve_uncached(const std::string& doi);
  std::shared_ptr<std::mutex> lock_for(const std::string& key);

  http::Client& client_;
  ResolverConfig config_;
  std::filesystem::path dir_;
  std::shared_ptr<TextExtractor> extractor_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

struct TermCount {
  std::string term;
  std::size_t count = 0;

  friend bool operator==(const TermCount&, const TermCount&) = default;
};

struct TermMatchReport {
  std::string doi;
  std::vector<TermCount> matched;
  std::vector<std::string> unmatched;
  bool scholarly = false;

  bool is_matched(std::string_view term) const;
  nlohmann::json to_json() const;
  static TermMatchReport from_json(const nlohmann::json& j);

  friend bool operator==(const TermMatchReport&, const TermMatchReport&) = default;
};

/// Number of case-insensitive occurrences of `term` in `text` that are
/// delimited on both sides by a boundary: start/end of text or any
/// character other than a letter, digit, underscore or dot; a dot right
/// after the match also ends it when a boundary follows. Non-ASCII
/// characters count as letters unless they are punctuation or symbols.
std::size_t count_occurrences(std::string_view text, std::string_view term);

/// Partitions `terms` into matched (with counts) and unmatched, keeping
/// input order. Duplicate input terms are considered once.
TermMatchReport match_terms(const std::vector<std::string>& terms, const FulltextDocument& doc,
                            std::size_t threshold = 1);

}  // namespace scholex::scholarly
