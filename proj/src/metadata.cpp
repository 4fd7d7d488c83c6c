// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/metadata.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "scholex/doi.hpp"
#include "scholex/harvester.hpp"
#include "scholex/util.hpp"

namespace scholex::metadata {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

bool is_underline(std::string_view line) {
  std::string t = trim(line);
  if (t.size() < 3) return false;
  char c = t[0];
  if (std::string_view("=-~^*#+").find(c) == std::string_view::npos) return false;
  return std::all_of(t.begin(), t.end(), [c](char x) { return x == c; });
}

bool is_atx_heading(std::string_view line) {
  std::string t = trim(line);
  if (t.empty() || t[0] != '#') return false;
  auto hashes = t.find_first_not_of('#');
  return hashes != std::string::npos && hashes <= 6 && t[hashes] == ' ';
}

// Lines made only of images, badges, links, or HTML.
bool is_decoration(std::string_view line) {
  std::string t = trim(line);
  if (t.empty()) return false;
  return t.rfind("[![", 0) == 0 || t.rfind("![", 0) == 0 ||
         t.rfind(".. image::", 0) == 0 || t.rfind(".. |", 0) == 0 ||
         t.rfind(":target:", 0) == 0 || t.rfind(":alt:", 0) == 0 ||
         t.rfind("<", 0) == 0 || t.rfind("|", 0) == 0 || t.rfind("---", 0) == 0 ||
         t.rfind("```", 0) == 0;
}

std::string strip_atx(std::string_view line) {
  std::string t = trim(line);
  auto hashes = t.find_first_not_of('#');
  std::string title = trim(std::string_view(t).substr(hashes));
  while (!title.empty() && title.back() == '#') title.pop_back();
  return trim(title);
}

}  // namespace

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::ExplicitCites: return "ExplicitCites";
    case Provenance::ExplicitIsSupplementTo: return "ExplicitIsSupplementTo";
    case Provenance::ReadmeMined: return "ReadmeMined";
  }
  return "ReadmeMined";
}

Provenance provenance_from_string(std::string_view text) {
  if (text == "ExplicitCites") return Provenance::ExplicitCites;
  if (text == "ExplicitIsSupplementTo") return Provenance::ExplicitIsSupplementTo;
  return Provenance::ReadmeMined;
}

RelationLinks extract_relation_links(const harvester::PackageRecord& record) {
  using harvester::RelationKind;
  RelationLinks out;
  std::set<std::pair<std::string, Provenance>> seen;
  for (const auto& rel : record.relations) {
    if (rel.kind == RelationKind::IsVersionOf) {
      if (!out.version_group) {
        auto normalized = doi::normalize(rel.identifier);
        out.version_group = normalized ? *normalized : rel.identifier;
      }
      continue;
    }
    if (rel.kind != RelationKind::Cites && rel.kind != RelationKind::IsSupplementTo) {
      continue;
    }
    auto normalized = doi::normalize(rel.identifier);
    if (!normalized) {
      ++out.ignored;
      continue;
    }
    Provenance prov = rel.kind == RelationKind::Cites ? Provenance::ExplicitCites
                                                      : Provenance::ExplicitIsSupplementTo;
    if (!seen.emplace(doi::canonical_key(*normalized), prov).second) continue;
    out.links.push_back({*normalized, prov, std::nullopt});
  }
  return out;
}

std::vector<ArticleLink> extract_readme_links(std::string_view readme_text,
                                              const SelfIdentifiers& self,
                                              std::string_view readme_file) {
  std::set<std::string> excluded;
  for (const auto& d : self.dois) excluded.insert(doi::canonical_key(d));
  std::set<std::string> seen;
  std::vector<ArticleLink> links;
  for (auto& occ : doi::find_all(readme_text)) {
    std::string key = doi::canonical_key(occ.doi);
    if (excluded.count(key) || !seen.insert(key).second) continue;
    links.push_back({std::move(occ.doi), Provenance::ReadmeMined,
                     SourceSpan{std::string(readme_file), occ.offset}});
  }
  return links;
}

std::size_t PackageMetadata::explicit_link_count() const {
  return static_cast<std::size_t>(std::count_if(
      article_links.begin(), article_links.end(),
      [](const ArticleLink& l) { return is_explicit(l.provenance); }));
}

std::size_t PackageMetadata::readme_link_count() const {
  return article_links.size() - explicit_link_count();
}

PackageMetadata extract_package_metadata(const harvester::PackageRecord& record,
                                         const std::optional<ReadmeFile>& readme) {
  PackageMetadata meta;
  auto relation = extract_relation_links(record);
  meta.version_group = relation.version_group;
  meta.ignored_relation_identifiers = relation.ignored;
  meta.unparseable_dois = relation.ignored;
  if (record.languages) meta.languages = *record.languages;

  std::string title = trim(record.title);
  if (!title.empty()) {
    meta.name = title;
  } else if (readme) {
    meta.name = first_heading(readme->text).value_or("");
  }
  if (meta.name.empty()) meta.name = record.doi;

  if (record.description) {
    std::string d = strip_html(*record.description);
    if (!d.empty()) meta.description = d;
  }
  if (!meta.description && readme) meta.description = first_paragraph(readme->text);

  meta.article_links = relation.links;
  if (readme) {
    meta.readme_text = readme->text;
    SelfIdentifiers self;
    self.dois.push_back(record.doi);
    if (record.concept_doi) self.dois.push_back(*record.concept_doi);
    if (relation.version_group) self.dois.push_back(*relation.version_group);

    std::set<std::string> explicit_keys;
    for (const auto& l : relation.links) explicit_keys.insert(doi::canonical_key(l.doi));
    for (auto& link : extract_readme_links(readme->text, self, readme->name)) {
      if (explicit_keys.count(doi::canonical_key(link.doi))) continue;
      meta.article_links.push_back(std::move(link));
    }
    meta.unparseable_dois += doi::count_unparseable_mentions(readme->text);
  }
  return meta;
}

std::optional<std::filesystem::path> find_readme(const std::filesystem::path& root) {
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) return std::nullopt;
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(root, ec)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (to_lower_ascii(name).rfind("readme", 0) == 0) names.push_back(name);
  }
  if (names.empty()) return std::nullopt;
  std::sort(names.begin(), names.end());
  return root / names.front();
}

std::optional<ReadmeFile> load_readme(const std::filesystem::path& root) {
  auto path = find_readme(root);
  if (!path) return std::nullopt;
  return ReadmeFile{path->filename().string(), decode_utf8_lossy(read_file(*path)).text};
}

std::optional<std::string> find_code_host_url(std::string_view text) {
  for (std::string_view marker : {"https://github.com/", "http://github.com/",
                                  "https://www.github.com/", "github.com/"}) {
    std::size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string_view::npos) {
      std::size_t end = pos;
      while (end < text.size()) {
        char c = text[end];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ')' || c == ']' ||
            c == '"' || c == '\'' || c == '>' || c == '<' || c == '`')
          break;
        ++end;
      }
      std::string url(text.substr(pos, end - pos));
      if (url.rfind("http", 0) != 0) url = "https://" + url;
      if (auto normalized = harvester::normalize_code_host_url(url)) return normalized;
      pos = end;
    }
  }
  return std::nullopt;
}

std::optional<std::string> first_heading(std::string_view readme_text) {
  auto lines = split_lines(readme_text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_atx_heading(lines[i])) return strip_atx(lines[i]);
    std::string t = trim(lines[i]);
    if (!t.empty() && !is_underline(lines[i]) && i + 1 < lines.size() &&
        is_underline(lines[i + 1]) && trim(lines[i + 1]).size() >= t.size() / 2) {
      return t;
    }
  }
  return std::nullopt;
}

std::optional<std::string> first_paragraph(std::string_view readme_text) {
  auto lines = split_lines(readme_text);
  std::size_t i = 0;
  // Skip up to and including the title.
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (is_atx_heading(lines[k])) {
      i = k + 1;
      break;
    }
    if (!trim(lines[k]).empty() && k + 1 < lines.size() && is_underline(lines[k + 1]) &&
        !is_underline(lines[k])) {
      i = k + 2;
      break;
    }
  }
  std::string paragraph;
  for (; i < lines.size(); ++i) {
    std::string t = trim(lines[i]);
    if (t.empty()) {
      if (!paragraph.empty()) break;
      continue;
    }
    if (is_atx_heading(lines[i]) || is_underline(lines[i]) || is_decoration(lines[i]) ||
        (i + 1 < lines.size() && is_underline(lines[i + 1]))) {
      if (!paragraph.empty()) break;
      continue;
    }
    if (!paragraph.empty()) paragraph.push_back(' ');
    paragraph += t;
  }
  if (paragraph.empty()) return std::nullopt;
  return paragraph;
}

std::string strip_html(std::string_view html) {
  std::string out;
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') {
      in_tag = true;
      out.push_back(' ');
    } else if (c == '>' && in_tag) {
      in_tag = false;
    } else if (!in_tag) {
      out.push_back(c);
    }
  }
  for (auto [entity, ch] : {std::pair{"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"},
                            {"&quot;", "\""}, {"&#39;", "'"}, {"&nbsp;", " "}}) {
    std::string e(entity);
    for (std::size_t p; (p = out.find(e)) != std::string::npos;) out.replace(p, e.size(), ch);
  }
  std::string collapsed;
  bool space = false;
  for (char c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !collapsed.empty();
    } else {
      if (space) collapsed.push_back(' ');
      space = false;
      collapsed.push_back(c);
    }
  }
  return collapsed;
}

nlohmann::json PackageMetadata::to_json() const {
  nlohmann::json links = nlohmann::json::array();
  for (const auto& l : article_links) {
    nlohmann::json j{{"doi", l.doi}, {"provenance", to_string(l.provenance)}};
    if (l.source_span) {
      j["source_span"] = {{"file", l.source_span->file}, {"offset", l.source_span->offset}};
    }
    links.push_back(std::move(j));
  }
  nlohmann::json j{{"name", name},
                   {"languages", languages},
                   {"article_links", std::move(links)},
                   {"ignored_relation_identifiers", ignored_relation_identifiers},
                   {"unparseable_dois", unparseable_dois}};
  j["description"] = description ? nlohmann::json(*description) : nlohmann::json();
  j["version_group"] = version_group ? nlohmann::json(*version_group) : nlohmann::json();
  j["readme_text"] = readme_text ? nlohmann::json(*readme_text) : nlohmann::json();
  return j;
}

PackageMetadata PackageMetadata::from_json(const nlohmann::json& j) {
  PackageMetadata m;
  m.name = j.at("name").get<std::string>();
  m.languages = j.at("languages").get<std::vector<std::string>>();
  if (!j.at("description").is_null()) m.description = j["description"].get<std::string>();
  if (!j.at("version_group").is_null())
    m.version_group = j["version_group"].get<std::string>();
  if (j.contains("readme_text") && j["readme_text"].is_string())
    m.readme_text = j["readme_text"].get<std::string>();
  m.ignored_relation_identifiers = j.value("ignored_relation_identifiers", 0u);
  m.unparseable_dois = j.value("unparseable_dois", 0u);
  for (const auto& l : j.at("article_links")) {
    ArticleLink link{l.at("doi").get<std::string>(),
                     provenance_from_string(l.at("provenance").get<std::string>()),
                     std::nullopt};
    if (l.contains("source_span")) {
      link.source_span = SourceSpan{l["source_span"].at("file").get<std::string>(),
                                    l["source_span"].at("offset").get<std::size_t>()};
    }
    m.article_links.push_back(std::move(link));
  }
  return m;
}

}  // namespace scholex::metadata
