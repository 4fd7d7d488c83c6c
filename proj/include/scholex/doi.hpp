// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scholex::doi {

/// Characters stripped from the end of a DOI candidate found in prose.
inline constexpr std::string_view kTrailingPunctuation = ".,;:)]}\"'";

/// True when `text` as a whole is a DOI of shape `10.NNNN/suffix`
/// (4 to 9 registrant digits, suffix free of whitespace and `"'<>`)
/// with no trailing punctuation left to trim.
bool is_valid(std::string_view text);

/// Normalizes an identifier that may carry a resolver prefix
/// (`https://doi.org/`, `http://dx.doi.org/`, `doi:`). Returns the bare DOI
/// when what remains is valid after trimming trailing punctuation.
std::optional<std::string> normalize(std::string_view identifier);

/// Case-insensitive key used for equality: DOIs are case-insensitive in
/// the handle system, so comparisons go through this.
std::string canonical_key(std::string_view doi);

/// Filesystem/IRI slug: "/" replaced by "_".
std::string slug(std::string_view doi);

struct Occurrence {
  std::string doi;
  std::size_t offset = 0;  ///< byte offset of the "10." prefix
};

/// Every DOI literal in `text`, left to right, trailing punctuation
/// trimmed. Covers bare literals, resolver URLs, and badge URLs since
/// all of them embed the `10.` literal.
std::vector<Occurrence> find_all(std::string_view text);

/// Count of DOI-looking mentions ("doi:" or "doi.org/" followed by
/// something) that do not yield a valid DOI.
std::size_t count_unparseable_mentions(std::string_view text);

}  // namespace scholex::doi
