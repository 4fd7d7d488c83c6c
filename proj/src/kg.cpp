// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/kg.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

#include "scholex/doi.hpp"
#include "scholex/error.hpp"
#include "scholex/util.hpp"

namespace scholex::kg {

// ---- vocabulary ----------------------------------------------------------

Vocabulary::Vocabulary(std::string base) : base_(std::move(base)) {
  while (!base_.empty() && base_.back() == '/') base_.pop_back();
}

namespace {

std::string doi_segment(std::string_view doi) {
  return url_encode(doi::slug(doi::canonical_key(doi)));
}

}  // namespace

std::string Vocabulary::term(std::string_view name) const { return base_ + "/vocab/" + std::string(name); }

std::string Vocabulary::paper(std::string_view doi) const { return base_ + "/paper/" + doi_segment(doi); }

std::string Vocabulary::software(std::string_view doi) const {
  return base_ + "/software/" + doi_segment(doi);
}

std::string Vocabulary::contribution(std::string_view paper_doi, std::string_view software_doi) const {
  return base_ + "/contribution/" + doi_segment(paper_doi) + "/" + doi_segment(software_doi);
}

std::string Vocabulary::concept_term(std::string_view text) const {
  return base_ + "/term/" + url_encode(text);
}

const std::vector<std::string>& Vocabulary::predicate_names() {
  static const std::vector<std::string> names = {
      "hasContribution", "usesMethod",        "usesData", "hasSupplement",   "hasTitle",
      "hasDescription",  "usesLanguage",      "hasCodeRepository", "hasDoi", "matchedTermCount"};
  return names;
}

const std::vector<std::string>& Vocabulary::class_names() {
  static const std::vector<std::string> names = {"Paper", "Contribution", "Software", "Method",
                                                 "Dataset"};
  return names;
}

// ---- graph ---------------------------------------------------------------

ContributionGraph build_contribution_graph(const GraphInputs& in, const Vocabulary& v) {
  if (!in.report || !in.report->scholarly || in.report->matched.empty()) {
    throw Error(ErrorCode::NotScholarly, "no extracted term appears in " + in.link.doi);
  }
  const auto& meta = *in.metadata;
  ContributionGraph g;
  g.package_doi = in.package_doi;
  g.article_doi = in.link.doi;
  g.paper_node = NodeRef::iri(v.paper(in.link.doi));
  g.software_node = NodeRef::iri(v.software(in.package_doi));
  g.contribution_node = NodeRef::iri(v.contribution(in.link.doi, in.package_doi));

  std::set<KnowledgeTriple> triples;
  const NodeRef type = NodeRef::iri(std::string(kRdfType));
  const NodeRef label = NodeRef::iri(std::string(kRdfsLabel));
  auto add = [&](const NodeRef& s, const NodeRef& p, const NodeRef& o) { triples.insert({s, p, o}); };
  auto pred = [&](std::string_view name) { return NodeRef::iri(v.term(name)); };
  auto declare_class = [&](std::string_view name) {
    NodeRef cls = NodeRef::iri(v.term(name));
    add(cls, label, NodeRef::literal(std::string(name)));
    return cls;
  };

  add(g.paper_node, type, declare_class("Paper"));
  add(g.paper_node, label, NodeRef::literal(in.link.doi));
  add(g.paper_node, pred("hasDoi"), NodeRef::literal(in.link.doi));
  add(g.paper_node, pred("hasContribution"), g.contribution_node);

  add(g.contribution_node, type, declare_class("Contribution"));
  add(g.contribution_node, label, NodeRef::literal("Contribution of " + meta.name));
  add(g.contribution_node, pred("hasSupplement"), g.software_node);
  add(g.contribution_node, pred("matchedTermCount"),
      NodeRef::literal(std::to_string(in.report->matched.size()), std::string(kXsdInteger)));

  add(g.software_node, type, declare_class("Software"));
  add(g.software_node, label, NodeRef::literal(meta.name));
  add(g.software_node, pred("hasTitle"), NodeRef::literal(meta.name));
  add(g.software_node, pred("hasDoi"), NodeRef::literal(in.package_doi));
  if (meta.description && !meta.description->empty()) {
    add(g.software_node, pred("hasDescription"), NodeRef::literal(*meta.description));
  }
  for (const auto& lang : meta.languages) add(g.software_node, pred("usesLanguage"), NodeRef::literal(lang));
  if (in.code_host_url) {
    add(g.software_node, pred("hasCodeRepository"),
        NodeRef::literal(*in.code_host_url, std::string(kXsdAnyUri)));
  }

  std::vector<analysis::Term> roles;
  if (in.records) roles = analysis::merge_terms(*in.records);
  for (const auto& m : in.report->matched) {
    auto it = std::find_if(roles.begin(), roles.end(), [&](const analysis::Term& t) { return t.text == m.term; });
    bool dataset = it != roles.end() && it->role == analysis::TermRole::Dataset;
    NodeRef term = NodeRef::iri(v.concept_term(m.term));
    add(term, type, declare_class(dataset ? "Dataset" : "Method"));
    add(term, label, NodeRef::literal(m.term));
    add(g.contribution_node, pred(dataset ? "usesData" : "usesMethod"), term);
  }
  g.triples.assign(triples.begin(), triples.end());
  return g;
}

// ---- N-Triples -------------------------------------------------------------

bool is_valid_iri(std::string_view iri) {
  auto colon = iri.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  if (!std::isalpha(static_cast<unsigned char>(iri[0]))) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    char c = iri[i];
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.')) return false;
  }
  for (char c : iri) {
    auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || std::string_view("<>\"{}|^`\\").find(c) != std::string_view::npos) return false;
  }
  return true;
}

std::string escape_literal(std::string_view value) {
  std::string out;
  out.reserve(value.size() + 2);
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default: {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x20 || u == 0x7F) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04X", u);
          out += buf;
        } else {
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

namespace {

std::string render_iri(const std::string& iri) {
  if (!is_valid_iri(iri)) throw Error(ErrorCode::InvalidIri, "invalid IRI: " + iri);
  return "<" + iri + ">";
}

std::string render(const NodeRef& n) {
  if (n.is_iri()) return render_iri(n.value);
  std::string s = "\"" + escape_literal(n.value) + "\"";
  if (n.datatype) s += "^^" + render_iri(*n.datatype);
  return s;
}

}  // namespace

std::string serialize_ntriples(const std::vector<KnowledgeTriple>& triples) {
  std::vector<std::string> lines;
  lines.reserve(triples.size());
  for (const auto& t : triples) {
    if (!t.subject.is_iri() || !t.predicate.is_iri()) {
      throw Error(ErrorCode::InvalidIri, "subject and predicate must be IRIs");
    }
    lines.push_back(render(t.subject) + " " + render(t.predicate) + " " + render(t.object) + " .\n");
  }
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  std::string out;
  for (const auto& l : lines) out += l;
  return out;
}

// ---- receipts and ledger -----------------------------------------------------

const char* to_string(IngestStatus s) {
  return s == IngestStatus::Ingested ? "ingested" : "dry_run_written";
}

nlohmann::json IngestionReceipt::to_json() const {
  return {{"endpoint", endpoint},
          {"created_ids", created_ids},
          {"status", kg::to_string(status)},
          {"graph_hash", graph_hash}};
}

IngestionReceipt IngestionReceipt::from_json(const nlohmann::json& j) {
  IngestionReceipt r;
  r.endpoint = j.at("endpoint").get<std::string>();
  r.created_ids = j.at("created_ids").get<std::map<std::string, std::string>>();
  std::string status = j.at("status").get<std::string>();
  if (status == "ingested") {
    r.status = IngestStatus::Ingested;
  } else if (status == "dry_run_written") {
    r.status = IngestStatus::DryRunWritten;
  } else {
    throw Error(ErrorCode::LedgerCorrupt, "unknown receipt status " + status);
  }
  r.graph_hash = j.at("graph_hash").get<std::string>();
  return r;
}

IngestLedger::IngestLedger(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) return;
  std::string text = read_file(path_);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) {
      spdlog::warn("ignoring incomplete last line of {}", path_.string());
      break;
    }
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Entry e{j.at("package_doi").get<std::string>(), j.at("article_doi").get<std::string>(),
              IngestionReceipt::from_json(j.at("receipt"))};
      latest_[key(e.package_doi, e.article_doi)] = std::move(e);
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::LedgerCorrupt,
                  path_.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
}

std::string IngestLedger::key(const std::string& package_doi, const std::string& article_doi) {
  return doi::canonical_key(package_doi) + "\n" + doi::canonical_key(article_doi);
}

std::optional<IngestLedger::Entry> IngestLedger::find(const std::string& package_doi,
                                                      const std::string& article_doi) const {
  std::lock_guard<std::mutex> guard(mutex_);
  auto it = latest_.find(key(package_doi, article_doi));
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

void IngestLedger::append(const Entry& e) {
  nlohmann::json j{{"package_doi", e.package_doi},
                   {"article_doi", e.article_doi},
                   {"receipt", e.receipt.to_json()}};
  std::lock_guard<std::mutex> guard(mutex_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  append_line_locked(path_, j.dump());
  latest_[key(e.package_doi, e.article_doi)] = e;
}

std::shared_ptr<std::mutex> IngestLedger::key_mutex(const std::string& package_doi,
                                                     const std::string& article_doi) {
  std::lock_guard<std::mutex> guard(mutex_);
  auto& m = key_mutexes_[key(package_doi, article_doi)];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

// ---- ingestion ---------------------------------------------------------------

std::filesystem::path ntriples_path(const SinkConfig& sink, const ContributionGraph& graph) {
  return sink.output_dir / (doi::slug(doi::canonical_key(graph.package_doi)) + "__" +
                            doi::slug(doi::canonical_key(graph.article_doi)) + ".nt");
}

namespace {

std::string remote_id(const http::Response& response) {
  auto j = nlohmann::json::parse(response.body, nullptr, false);
  if (j.is_object() && j.contains("id")) {
    const auto& id = j.at("id");
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<long long>());
  }
  throw Error(ErrorCode::MalformedResponse, "graph endpoint response lacks an id");
}

http::Response checked(http::Response r) {
  if (r.status < 200 || r.status >= 300) throw EndpointRejected(r.status, r.body);
  return r;
}

std::map<std::string, std::string> post_graph(const ContributionGraph& graph, const SinkConfig& sink,
                                              http::Client& client) {
  http::Headers headers;
  if (sink.token) headers.emplace_back("Authorization", "Bearer " + *sink.token);
  std::string base = sink.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();

  std::set<std::string> nodes;
  std::map<std::string, std::string> labels;
  std::map<std::string, std::vector<std::string>> classes;
  for (const auto& t : graph.triples) {
    nodes.insert(t.subject.value);
    if (t.object.is_iri()) nodes.insert(t.object.value);
    if (t.predicate.value == kRdfsLabel && !t.object.is_iri()) labels[t.subject.value] = t.object.value;
    if (t.predicate.value == kRdfType) classes[t.subject.value].push_back(t.object.value);
  }
  std::map<std::string, std::string> ids;
  for (const auto& iri : nodes) {
    nlohmann::json body{{"iri", iri}, {"label", labels.count(iri) ? labels[iri] : iri},
                        {"classes", classes.count(iri) ? classes[iri] : std::vector<std::string>{}}};
    ids[iri] = remote_id(checked(client.post_json(base + "/resources", body, headers)));
  }
  for (const auto& t : graph.triples) {
    if (t.predicate.value == kRdfType || t.predicate.value == kRdfsLabel) continue;
    nlohmann::json object;
    if (t.object.is_iri()) {
      object = {{"resource", ids.at(t.object.value)}};
    } else {
      object = {{"literal", t.object.value}};
      if (t.object.datatype) object["datatype"] = *t.object.datatype;
    }
    nlohmann::json body{{"subject", ids.at(t.subject.value)}, {"predicate", t.predicate.value},
                        {"object", object}};
    checked(client.post_json(base + "/statements", body, headers));
  }
  return ids;
}

}  // namespace

IngestionReceipt ingest(const ContributionGraph& graph, const SinkConfig& sink, http::Client* client,
                        IngestLedger& ledger, bool force) {
  auto lock = ledger.key_mutex(graph.package_doi, graph.article_doi);
  std::lock_guard<std::mutex> guard(*lock);

  std::string nt = serialize_ntriples(graph.triples);
  std::string hash = sha256_hex(nt);
  bool file_mode = sink.mode == SinkConfig::Mode::File;

  if (auto prior = ledger.find(graph.package_doi, graph.article_doi)) {
    bool same_mode = (prior->receipt.status == IngestStatus::DryRunWritten) == file_mode;
    if (prior->receipt.graph_hash == hash && same_mode) {
      IngestionReceipt r = prior->receipt;
      r.replayed = true;
      if (file_mode) {
        auto path = ntriples_path(sink, graph);
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) {
          std::filesystem::create_directories(sink.output_dir);
          atomic_write_file(path, nt);
        }
      }
      return r;
    }
    if (prior->receipt.graph_hash != hash && !force) {
      throw Error(ErrorCode::LedgerConflict, "ledger holds a different graph for (" + graph.package_doi +
                                                 ", " + graph.article_doi + ")");
    }
  }

  IngestionReceipt receipt;
  receipt.graph_hash = hash;
  if (file_mode) {
    auto path = ntriples_path(sink, graph);
    std::filesystem::create_directories(sink.output_dir);
    atomic_write_file(path, nt);
    receipt.endpoint = path.string();
    receipt.status = IngestStatus::DryRunWritten;
  } else {
    if (!client) throw Error(ErrorCode::Config, "HTTP ingestion needs a client");
    receipt.created_ids = post_graph(graph, sink, *client);
    receipt.endpoint = sink.base_url;
    receipt.status = IngestStatus::Ingested;
  }
  ledger.append({graph.package_doi, graph.article_doi, receipt});
  return receipt;
}

}  // namespace scholex::kg
