// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/doi.hpp"

#include <algorithm>
#include <cctype>

namespace scholex::doi {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_suffix_char(char c) {
  auto u = static_cast<unsigned char>(c);
  if (u <= 0x20 || u == 0x7f) return false;
  return c != '"' && c != '\'' && c != '<' && c != '>';
}

bool istarts_with(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

bool iends_with(std::string_view text, std::string_view suffix) {
  return text.size() >= suffix.size() &&
         istarts_with(text.substr(text.size() - suffix.size()), suffix);
}

// Length of the `10.NNNN/` prefix at the start of `text`, or 0.
std::size_t prefix_length(std::string_view text) {
  if (text.size() < 3 || text[0] != '1' || text[1] != '0' || text[2] != '.')
    return 0;
  std::size_t i = 3;
  while (i < text.size() && is_digit(text[i])) ++i;
  std::size_t digits = i - 3;
  if (digits < 4 || digits > 9) return 0;
  if (i >= text.size() || text[i] != '/') return 0;
  return i + 1;
}

std::size_t count_of(std::string_view s, char c) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), c));
}

// Strips trailing punctuation. Closing brackets are kept while they
// balance an opening one inside the suffix (10.1016/S0140-6736(20)30183-5).
std::string_view trim_trailing(std::string_view candidate) {
  while (!candidate.empty()) {
    char last = candidate.back();
    if (kTrailingPunctuation.find(last) == std::string_view::npos) break;
    if (last == ')' && count_of(candidate, '(') >= count_of(candidate, ')'))
      break;
    if (last == ']' && count_of(candidate, '[') >= count_of(candidate, ']'))
      break;
    if (last == '}' && count_of(candidate, '{') >= count_of(candidate, '}'))
      break;
    candidate.remove_suffix(1);
  }
  return candidate;
}

// Trimmed DOI starting at text[0], or empty.
std::string_view scan_candidate(std::string_view text) {
  std::size_t pre = prefix_length(text);
  if (pre == 0) return {};
  std::size_t end = pre;
  while (end < text.size() && is_suffix_char(text[end])) ++end;
  std::string_view raw = text.substr(0, end);
  // Markdown link boundary: "[10.1/x](https://doi.org/10.1/x)".
  if (auto cut = raw.find("]("); cut != std::string_view::npos && cut >= pre)
    raw = raw.substr(0, cut);
  std::string_view trimmed = trim_trailing(raw);
  if (trimmed.size() <= pre) return {};
  return trimmed;
}

}  // namespace

bool is_valid(std::string_view text) {
  std::size_t pre = prefix_length(text);
  if (pre == 0 || text.size() == pre) return false;
  if (!std::all_of(text.begin() + static_cast<std::ptrdiff_t>(pre), text.end(),
                   is_suffix_char))
    return false;
  return trim_trailing(text).size() == text.size();
}

std::optional<std::string> normalize(std::string_view identifier) {
  while (!identifier.empty() &&
         std::isspace(static_cast<unsigned char>(identifier.front())))
    identifier.remove_prefix(1);
  while (!identifier.empty() &&
         std::isspace(static_cast<unsigned char>(identifier.back())))
    identifier.remove_suffix(1);

  for (std::string_view prefix :
       {"https://doi.org/", "http://doi.org/", "https://dx.doi.org/",
        "http://dx.doi.org/", "doi.org/", "doi:"}) {
    if (istarts_with(identifier, prefix)) {
      identifier.remove_prefix(prefix.size());
      break;
    }
  }
  while (!identifier.empty() && identifier.front() == ' ')
    identifier.remove_prefix(1);

  std::string_view trimmed = trim_trailing(identifier);
  if (!is_valid(trimmed)) return std::nullopt;
  return std::string(trimmed);
}

std::string canonical_key(std::string_view doi) {
  std::string key(doi);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return key;
}

std::string slug(std::string_view doi) {
  std::string out(doi);
  std::replace(out.begin(), out.end(), '/', '_');
  return out;
}

std::vector<Occurrence> find_all(std::string_view text) {
  std::vector<Occurrence> found;
  std::size_t pos = 0;
  while (pos + 3 < text.size()) {
    std::size_t hit = text.find("10.", pos);
    if (hit == std::string_view::npos) break;
    if (hit > 0) {
      auto prev = static_cast<unsigned char>(text[hit - 1]);
      if (std::isalnum(prev) || prev == '.' || prev == '_') {
        pos = hit + 1;
        continue;
      }
    }
    auto doi_view = scan_candidate(text.substr(hit));
    if (doi_view.empty()) {
      pos = hit + 1;
      continue;
    }
    std::string value(doi_view);
    // Badge images: ".../badge/DOI/10.5281/zenodo.123.svg".
    std::string_view before = text.substr(0, hit);
    if (iends_with(before, "badge/doi/")) {
      for (std::string_view ext : {".svg", ".png"}) {
        if (iends_with(value, ext)) {
          value.resize(value.size() - ext.size());
          break;
        }
      }
    }
    if (is_valid(value)) found.push_back({std::move(value), hit});
    pos = hit + std::max<std::size_t>(doi_view.size(), 1);
  }
  return found;
}

std::size_t count_unparseable_mentions(std::string_view text) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    std::size_t after = 0;
    if (istarts_with(text.substr(i), "doi.org/")) {
      after = i + 8;
    } else if (istarts_with(text.substr(i), "doi:") &&
               (i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1])))) {
      after = i + 4;
    } else {
      continue;
    }
    while (after < text.size() && text[after] == ' ') ++after;
    std::size_t end = after;
    while (end < text.size() && is_suffix_char(text[end])) ++end;
    if (end == after) continue;  // bare "doi:" label with nothing after it
    std::string_view token = text.substr(after, end - after);
    auto doi_view = scan_candidate(token);
    if (doi_view.empty() || !is_valid(doi_view)) ++bad;
    i = end > i ? end - 1 : i;
  }
  return bad;
}

}  // namespace scholex::doi
