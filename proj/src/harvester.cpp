// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/harvester.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

#include "scholex/doi.hpp"
#include "scholex/error.hpp"
#include "scholex/metadata.hpp"
#include "scholex/util.hpp"

namespace scholex::harvester {
namespace {

using nlohmann::json;

std::optional<std::string> string_at(const json& obj, const char* key) {
  if (!obj.is_object()) return std::nullopt;
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  return std::nullopt;
}

std::optional<std::uint64_t> size_at(const json& obj) {
  for (const char* key : {"size", "filesize"}) {
    auto it = obj.find(key);
    if (it != obj.end() && it->is_number_unsigned()) return it->get<std::uint64_t>();
    if (it != obj.end() && it->is_number_integer() && it->get<std::int64_t>() >= 0)
      return static_cast<std::uint64_t>(it->get<std::int64_t>());
  }
  return std::nullopt;
}

IdScheme parse_scheme(std::string_view text) {
  std::string lower = to_lower_ascii(text);
  if (lower == "doi") return IdScheme::Doi;
  if (lower == "url") return IdScheme::Url;
  return IdScheme::Other;
}

const char* relation_name(RelationKind kind) {
  switch (kind) {
    case RelationKind::IsVersionOf: return "isVersionOf";
    case RelationKind::Cites: return "cites";
    case RelationKind::IsSupplementTo: return "isSupplementTo";
    case RelationKind::Other: return "other";
  }
  return "other";
}

std::string join_query(const std::vector<std::pair<std::string, std::string>>& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    out += out.empty() ? '?' : '&';
    out += k + "=" + url_encode(v);
  }
  return out;
}

bool ends_with_ci(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         to_lower_ascii(s.substr(s.size() - suffix.size())) == suffix;
}

void collect_paths(const std::filesystem::path& tree, std::vector<std::string>& out) {
  if (!std::filesystem::exists(tree)) return;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(tree)) {
    if (entry.is_regular_file()) {
      out.push_back(std::filesystem::relative(entry.path(), tree).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
}

// GitHub-style releases wrap everything in one top-level folder.
std::string detect_root(const std::filesystem::path& tree) {
  std::filesystem::path current = tree;
  std::string root;
  for (int depth = 0; depth < 2; ++depth) {
    std::vector<std::filesystem::path> dirs;
    bool has_files = false;
    for (const auto& entry : std::filesystem::directory_iterator(current)) {
      if (entry.is_directory()) dirs.push_back(entry.path());
      else has_files = true;
    }
    if (has_files || dirs.size() != 1) break;
    current = dirs.front();
    root = std::filesystem::relative(current, tree).generic_string();
  }
  return root;
}

}  // namespace

RelationKind parse_relation_kind(std::string_view text) {
  std::string lower = to_lower_ascii(text);
  if (lower == "isversionof") return RelationKind::IsVersionOf;
  if (lower == "cites") return RelationKind::Cites;
  if (lower == "issupplementto") return RelationKind::IsSupplementTo;
  return RelationKind::Other;
}

std::string first_page_url(const HarvestQuery& query) {
  std::vector<std::pair<std::string, std::string>> params;
  if (!query.text.empty()) params.emplace_back("q", query.text);
  params.emplace_back("type", query.resource_type);
  params.emplace_back("size", std::to_string(query.page_size));
  params.emplace_back("page", "1");
  std::string base = query.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + "/records" + join_query(params);
}

std::optional<PackageRecord> parse_record(const json& hit) {
  if (!hit.is_object()) return std::nullopt;
  const json empty = json::object();
  const json& meta = hit.contains("metadata") && hit["metadata"].is_object()
                         ? hit["metadata"]
                         : empty;
  PackageRecord r;
  auto id = string_at(hit, "id");
  if (!id) id = string_at(hit, "recid");
  if (!id || id->empty()) return std::nullopt;
  r.deposit_id = *id;

  auto doi_text = string_at(hit, "doi");
  if (!doi_text) doi_text = string_at(meta, "doi");
  if (!doi_text) return std::nullopt;
  auto normalized = doi::normalize(*doi_text);
  if (!normalized) return std::nullopt;
  r.doi = *normalized;

  if (auto c = string_at(hit, "conceptdoi"); c && doi::normalize(*c)) {
    r.concept_doi = *doi::normalize(*c);
  }
  r.title = string_at(meta, "title").value_or(string_at(hit, "title").value_or(""));
  r.description = string_at(meta, "description");

  if (meta.contains("related_identifiers") && meta["related_identifiers"].is_array()) {
    for (const auto& rel : meta["related_identifiers"]) {
      auto identifier = string_at(rel, "identifier");
      auto relation = string_at(rel, "relation");
      if (!identifier || !relation) continue;
      RelationEntry entry;
      entry.kind = parse_relation_kind(*relation);
      entry.kind_text = *relation;
      entry.identifier = *identifier;
      entry.scheme_text = string_at(rel, "scheme").value_or("");
      entry.scheme = parse_scheme(entry.scheme_text);
      r.relations.push_back(std::move(entry));
    }
  }

  if (hit.contains("files") && hit["files"].is_array()) {
    for (const auto& f : hit["files"]) {
      if (!f.is_object()) return std::nullopt;
      PackageFile file;
      file.filename = string_at(f, "key").value_or(string_at(f, "filename").value_or(""));
      auto size = size_at(f);
      std::optional<std::string> url;
      if (f.contains("links") && f["links"].is_object()) {
        url = string_at(f["links"], "self");
        if (!url) url = string_at(f["links"], "download");
        if (!url) url = string_at(f["links"], "content");
      }
      if (file.filename.empty() || !size || !url) return std::nullopt;
      file.size_bytes = *size;
      file.url = *url;
      file.checksum = string_at(f, "checksum").value_or("");
      r.size_bytes += file.size_bytes;
      r.files.push_back(std::move(file));
    }
  }
  return r;
}

HarvestPage parse_page(const json& page) {
  if (!page.is_object() || !page.contains("hits") || !page["hits"].is_object() ||
      !page["hits"].contains("hits") || !page["hits"]["hits"].is_array()) {
    throw Error(ErrorCode::MalformedResponse, "response is not a records page");
  }
  HarvestPage out;
  for (const auto& hit : page["hits"]["hits"]) {
    if (auto record = parse_record(hit)) {
      out.records.push_back(std::move(*record));
    } else {
      ++out.skipped;
      spdlog::debug("skipping malformed deposit record");
    }
  }
  const json& total = page["hits"].contains("total") ? page["hits"]["total"] : json();
  if (total.is_number_integer()) out.total_hint = total.get<std::int64_t>();
  else if (total.is_object() && total.contains("value"))
    out.total_hint = total["value"].get<std::int64_t>();
  // No next link, or an empty page, ends the listing.
  if (!out.records.empty() || out.skipped > 0) {
    if (page.contains("links") && page["links"].is_object()) {
      out.next_cursor = string_at(page["links"], "next");
    }
  }
  return out;
}

HarvestPage list_deposits(http::Client& client, const HarvestQuery& query,
                          const std::optional<std::string>& cursor) {
  std::string url = cursor ? *cursor : first_page_url(query);
  try {
    return parse_page(client.get_json(url));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("records page: ") + e.what());
  }
}

const char* to_string(FilterReason reason) {
  switch (reason) {
    case FilterReason::Kept: return "Kept";
    case FilterReason::TooLarge: return "TooLarge";
    case FilterReason::NoCodeHost: return "NoCodeHost";
  }
  return "Kept";
}

FilterDecision filter_package(const PackageRecord& record, const FilterLimits& limits) {
  if (record.size_bytes > limits.size_limit_bytes) {
    return {false, FilterReason::TooLarge};
  }
  if (limits.require_code_host && !record.code_host_url) {
    return {false, FilterReason::NoCodeHost};
  }
  return {true, FilterReason::Kept};
}

json Manifest::to_json() const {
  json files_json = json::array();
  for (const auto& f : files) {
    files_json.push_back({{"filename", f.filename},
                          {"size_bytes", f.size_bytes},
                          {"sha256", f.sha256},
                          {"extracted", f.extracted}});
  }
  return json{{"deposit_id", deposit_id}, {"doi", doi},     {"root", root},
              {"files", files_json},      {"paths", paths}};
}

Manifest Manifest::from_json(const json& j, const std::filesystem::path& tree) {
  Manifest m;
  m.deposit_id = j.at("deposit_id").get<std::string>();
  m.doi = j.at("doi").get<std::string>();
  m.root = j.at("root").get<std::string>();
  m.tree = tree;
  for (const auto& f : j.at("files")) {
    m.files.push_back({f.at("filename").get<std::string>(),
                       f.at("size_bytes").get<std::uint64_t>(),
                       f.at("sha256").get<std::string>(), f.at("extracted").get<bool>()});
  }
  m.paths = j.at("paths").get<std::vector<std::string>>();
  return m;
}

std::filesystem::path deposit_dir(const std::filesystem::path& workdir,
                                  const PackageRecord& record) {
  return workdir / doi::slug(record.doi);
}

Manifest fetch_package_archive(http::Client& client, const PackageRecord& record,
                               const std::filesystem::path& workdir,
                               const archive::Limits& limits) {
  const auto dir = deposit_dir(workdir, record);
  const auto tree = dir / "tree";
  const auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    return Manifest::from_json(json::parse(read_file(manifest_path)), tree);
  }

  // Stale partial state from an interrupted run.
  std::filesystem::remove_all(tree);
  std::filesystem::create_directories(tree);
  Manifest manifest;
  manifest.deposit_id = record.deposit_id;
  manifest.doi = record.doi;
  manifest.tree = tree;

  const bool several_archives =
      std::count_if(record.files.begin(), record.files.end(), [](const PackageFile& f) {
        return archive::detect(f.filename, {}).has_value();
      }) > 1;

  try {
    for (const auto& file : record.files) {
      auto safe_name = archive::safe_relative_path(file.filename);
      if (!safe_name || safe_name->empty()) {
        throw Error(ErrorCode::UnsafeArchiveEntry, "unsafe file name: " + file.filename);
      }
      std::string bytes = client.get(file.url, {}, false);
      if (file.checksum.rfind("md5:", 0) == 0 && md5_hex(bytes) != file.checksum.substr(4)) {
        throw Error(ErrorCode::CorruptArchive, "md5 mismatch for " + file.filename);
      }
      ManifestFile entry{file.filename, bytes.size(), sha256_hex(bytes), false};
      if (auto format = archive::detect(file.filename, bytes)) {
        auto target = tree;
        if (several_archives) {
          std::string stem = *safe_name;
          for (std::string_view ext : {".tar.gz", ".tgz", ".zip", ".tar"}) {
            if (ends_with_ci(stem, ext)) {
              stem.resize(stem.size() - ext.size());
              break;
            }
          }
          target = tree / stem;
        }
        archive::extract(bytes, *format, target, limits);
        entry.extracted = true;
      } else {
        atomic_write_file(tree / *safe_name, bytes);
      }
      manifest.files.push_back(std::move(entry));
    }
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    throw;
  }

  collect_paths(tree, manifest.paths);
  manifest.root = detect_root(tree);
  atomic_write_file(manifest_path, manifest.to_json().dump(2) + "\n");
  return manifest;
}

std::optional<std::string> normalize_code_host_url(std::string_view url) {
  std::string s(url);
  for (std::string_view prefix :
       {"https://www.github.com/", "http://www.github.com/", "https://github.com/",
        "http://github.com/", "git@github.com:", "github.com/"}) {
    if (to_lower_ascii(s).rfind(prefix, 0) == 0) {
      s = s.substr(prefix.size());
      std::vector<std::string> parts;
      std::size_t start = 0;
      while (parts.size() < 2 && start < s.size()) {
        auto end = s.find_first_of("/?#", start);
        parts.push_back(s.substr(start, end == std::string::npos ? std::string::npos
                                                                 : end - start));
        if (end == std::string::npos || s[end] != '/') break;
        start = end + 1;
      }
      if (parts.size() < 2) return std::nullopt;
      std::string owner = parts[0];
      std::string repo = parts[1];
      if (ends_with_ci(repo, ".git")) repo.resize(repo.size() - 4);
      auto valid = [](const std::string& part) {
        return !part.empty() && std::all_of(part.begin(), part.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                 c == '.';
        });
      };
      if (!valid(owner) || !valid(repo)) return std::nullopt;
      static const std::vector<std::string> kReserved = {
          "orgs", "topics", "features", "about", "sponsors", "settings", "marketplace"};
      if (std::find(kReserved.begin(), kReserved.end(), to_lower_ascii(owner)) !=
          kReserved.end())
        return std::nullopt;
      return "https://github.com/" + owner + "/" + repo;
    }
  }
  return std::nullopt;
}

std::vector<std::string> order_languages(const json& language_bytes) {
  std::vector<std::pair<std::string, std::int64_t>> entries;
  if (language_bytes.is_object()) {
    for (auto it = language_bytes.begin(); it != language_bytes.end(); ++it) {
      if (it.value().is_number()) entries.emplace_back(it.key(), it.value().get<std::int64_t>());
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> names;
  for (auto& [name, bytes] : entries) names.push_back(name);
  return names;
}

std::optional<CodeHostInfo> resolve_code_host(http::Client& client,
                                              const CodeHostConfig& config,
                                              const PackageRecord& record,
                                              const std::optional<std::string>& readme_text) {
  std::optional<std::string> url;
  if (record.code_host_url) url = normalize_code_host_url(*record.code_host_url);
  for (const auto& rel : record.relations) {
    if (url) break;
    url = normalize_code_host_url(rel.identifier);
  }
  if (!url && readme_text) url = metadata::find_code_host_url(*readme_text);
  if (!url) return std::nullopt;

  CodeHostInfo info{*url, {}, false};
  std::string path = url->substr(std::string("https://github.com/").size());
  std::string base = config.api_base;
  while (!base.empty() && base.back() == '/') base.pop_back();
  http::Headers headers{{"Accept", "application/vnd.github+json"}};
  if (config.token) headers.emplace_back("Authorization", "Bearer " + *config.token);
  try {
    info.languages = order_languages(client.get_json(base + "/repos/" + path + "/languages",
                                                     headers));
  } catch (const Error& e) {
    spdlog::warn("languages lookup for {} failed: {}", *url, e.what());
    info.languages_failed = true;
  }
  return info;
}

json to_json(const PackageRecord& r) {
  json relations = json::array();
  for (const auto& rel : r.relations) {
    relations.push_back({{"relation", rel.kind == RelationKind::Other
                                          ? rel.kind_text
                                          : std::string(relation_name(rel.kind))},
                         {"identifier", rel.identifier},
                         {"scheme", rel.scheme_text}});
  }
  json files = json::array();
  for (const auto& f : r.files) {
    files.push_back({{"filename", f.filename},
                     {"url", f.url},
                     {"size_bytes", f.size_bytes},
                     {"checksum", f.checksum}});
  }
  json j{{"deposit_id", r.deposit_id}, {"doi", r.doi},         {"title", r.title},
         {"size_bytes", r.size_bytes}, {"relations", relations}, {"files", files}};
  j["concept_doi"] = r.concept_doi ? json(*r.concept_doi) : json();
  j["description"] = r.description ? json(*r.description) : json();
  j["code_host_url"] = r.code_host_url ? json(*r.code_host_url) : json();
  j["languages"] = r.languages ? json(*r.languages) : json();
  return j;
}

PackageRecord record_from_json(const json& j) {
  PackageRecord r;
  r.deposit_id = j.at("deposit_id").get<std::string>();
  r.doi = j.at("doi").get<std::string>();
  r.title = j.at("title").get<std::string>();
  r.size_bytes = j.at("size_bytes").get<std::uint64_t>();
  for (const auto& rel : j.at("relations")) {
    RelationEntry e;
    e.kind_text = rel.at("relation").get<std::string>();
    e.kind = parse_relation_kind(e.kind_text);
    e.identifier = rel.at("identifier").get<std::string>();
    e.scheme_text = rel.at("scheme").get<std::string>();
    e.scheme = parse_scheme(e.scheme_text);
    r.relations.push_back(std::move(e));
  }
  for (const auto& f : j.at("files")) {
    r.files.push_back({f.at("filename").get<std::string>(), f.at("url").get<std::string>(),
                       f.at("size_bytes").get<std::uint64_t>(),
                       f.at("checksum").get<std::string>()});
  }
  if (!j.at("concept_doi").is_null()) r.concept_doi = j["concept_doi"].get<std::string>();
  if (!j.at("description").is_null()) r.description = j["description"].get<std::string>();
  if (!j.at("code_host_url").is_null()) r.code_host_url = j["code_host_url"].get<std::string>();
  if (!j.at("languages").is_null())
    r.languages = j["languages"].get<std::vector<std::string>>();
  return r;
}

}  // namespace scholex::harvester
