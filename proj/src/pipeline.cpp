// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "scholex/dataflow.hpp"
#include "scholex/doi.hpp"
#include "scholex/error.hpp"
#include "scholex/harvester.hpp"
#include "scholex/kg.hpp"
#include "scholex/metadata.hpp"
#include "scholex/util.hpp"

namespace scholex::pipeline {

namespace fs = std::filesystem;

// ---- config ------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void config_error(std::size_t line, const std::string& message) {
  throw Error(ErrorCode::Config, "config line " + std::to_string(line) + ": " + message);
}

template <typename T>
T parse_number(std::string_view value, std::size_t line, const std::string& key) {
  T out{};
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) {
    config_error(line, key + ": not a number: '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view value, std::size_t line, const std::string& key) {
  std::string v = to_lower_ascii(value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  config_error(line, key + ": not a boolean: '" + std::string(value) + "'");
}

fs::path resolve_path(std::string_view value, const fs::path& base_dir) {
  fs::path p{std::string(value)};
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p.lexically_normal();
}

bool is_http_url(const std::string& url) {
  return url.starts_with("http://") || url.starts_with("https://");
}

std::string strip_trailing_slash(std::string url) {
  while (url.size() > 1 && url.back() == '/') url.pop_back();
  return url;
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
  PipelineConfig c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    auto hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error(line_no, "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) config_error(line_no, "empty key");
    if (!seen.insert(key).second) config_error(line_no, "duplicate key " + key);

    if (key == "repository_api") c.repository_api = strip_trailing_slash(std::string(value));
    else if (key == "repository_query") c.repository_query = value;
    else if (key == "resource_type") c.resource_type = value;
    else if (key == "page_size") c.page_size = parse_number<int>(value, line_no, key);
    else if (key == "code_host_api") c.code_host_api = strip_trailing_slash(std::string(value));
    else if (key == "oa_resolver") c.oa_resolver = strip_trailing_slash(std::string(value));
    else if (key == "oa_email") c.oa_email = value;
    else if (key == "graph_endpoint") c.graph_endpoint = strip_trailing_slash(std::string(value));
    else if (key == "graph_base_iri") c.graph_base_iri = strip_trailing_slash(std::string(value));
    else if (key == "cache_dir") c.cache_dir = resolve_path(value, base_dir);
    else if (key == "output_dir") c.output_dir = resolve_path(value, base_dir);
    else if (key == "registry") {
      if (value.empty()) c.registry.reset();
      else c.registry = resolve_path(value, base_dir);
    }
    else if (key == "size_limit_bytes") c.size_limit_bytes = parse_number<std::uint64_t>(value, line_no, key);
    else if (key == "require_code_host") c.require_code_host = parse_bool(value, line_no, key);
    else if (key == "workers") c.workers = parse_number<int>(value, line_no, key);
    else if (key == "match_threshold") c.match_threshold = parse_number<std::size_t>(value, line_no, key);
    else if (key == "pdf_converter") c.pdf_converter = value;
    else if (key == "requests_per_second") c.requests_per_second = parse_number<double>(value, line_no, key);
    else if (key == "http_timeout_seconds") c.http_timeout_seconds = parse_number<int>(value, line_no, key);
    else if (key == "dry_run") c.dry_run = parse_bool(value, line_no, key);
    else if (key == "limit") c.limit = parse_number<std::size_t>(value, line_no, key);
    else config_error(line_no, "unknown key " + key);
  }
  return c;
}

void apply_environment(PipelineConfig& c) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("SCHOLEX_CACHE_DIR")) c.cache_dir = fs::path(*v).lexically_normal();
  if (auto v = env("SCHOLEX_OA_EMAIL")) c.oa_email = *v;
  if (auto v = env("SCHOLEX_GRAPH_TOKEN")) c.graph_token = *v;
  if (auto v = env("SCHOLEX_CODEHOST_TOKEN")) c.code_host_token = *v;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Config, "cannot read config " + path.string() + ": " + e.what());
  }
  auto c = parse_config(text, path.parent_path());
  apply_environment(c);
  return c;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::Config, m); };
  if (size_limit_bytes == 0) fail("size_limit_bytes must be > 0");
  if (workers < 1) fail("workers must be >= 1");
  if (page_size < 1) fail("page_size must be >= 1");
  if (match_threshold < 1) fail("match_threshold must be >= 1");
  if (!(requests_per_second > 0)) fail("requests_per_second must be > 0");
  if (http_timeout_seconds < 1) fail("http_timeout_seconds must be >= 1");
  if (!is_http_url(repository_api)) fail("repository_api must be an http(s) URL");
  if (!is_http_url(code_host_api)) fail("code_host_api must be an http(s) URL");
  if (!is_http_url(oa_resolver)) fail("oa_resolver must be an http(s) URL");
  if (!graph_endpoint.empty() && !is_http_url(graph_endpoint)) fail("graph_endpoint must be an http(s) URL");
  if (!kg::is_valid_iri(graph_base_iri)) fail("graph_base_iri is not a valid IRI");
  if (cache_dir.empty()) fail("cache_dir is empty");
  if (output_dir.empty()) fail("output_dir is empty");
  if (trim(pdf_converter).empty()) fail("pdf_converter is empty");
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"repository_api", repository_api},
          {"repository_query", repository_query},
          {"resource_type", resource_type},
          {"page_size", page_size},
          {"code_host_api", code_host_api},
          {"oa_resolver", oa_resolver},
          {"oa_email", oa_email},
          {"graph_endpoint", graph_endpoint},
          {"graph_base_iri", graph_base_iri},
          {"cache_dir", cache_dir.string()},
          {"output_dir", output_dir.string()},
          {"registry", registry ? nlohmann::json(registry->string()) : nlohmann::json()},
          {"size_limit_bytes", size_limit_bytes},
          {"require_code_host", require_code_host},
          {"workers", workers},
          {"match_threshold", match_threshold},
          {"pdf_converter", pdf_converter},
          {"requests_per_second", requests_per_second},
          {"http_timeout_seconds", http_timeout_seconds},
          {"dry_run", dry_run},
          {"limit", limit},
          {"resume", resume},
          {"force", force}};
}

// ---- report ------------------------------------------------------------------

namespace {

// Field table shared by +=, JSON and the text table.
struct Field {
  const char* key;
  std::uint64_t RunReport::*member;
  const char* label;
};

constexpr Field kFields[] = {
    {"packages_seen", &RunReport::packages_seen, "Packages harvested"},
    {"packages_kept", &RunReport::packages_kept, "Packages within size limit"},
    {"packages_with_code_host", &RunReport::packages_with_code_host, "Packages with a code-host URL"},
    {"article_links_explicit", &RunReport::article_links_explicit, "Article links from metadata relations"},
    {"article_links_readme", &RunReport::article_links_readme, "Article links mined from READMEs"},
    {"article_links_total", &RunReport::article_links_total, "Article links, total"},
    {"python_packages_linked", &RunReport::python_packages_linked, "Python packages with linked articles"},
    {"scripts_discovered", &RunReport::scripts_discovered, "Python scripts discovered"},
    {"scripts_parsed", &RunReport::scripts_parsed, "Python scripts parsed"},
    {"scripts_failed", &RunReport::scripts_failed, "Python scripts failed to parse"},
    {"packages_scholarly", &RunReport::packages_scholarly, "Packages with scholarly knowledge"},
    {"graphs_ingested", &RunReport::graphs_ingested, "Packages with ingested graphs"},
    {"dois_unparseable", &RunReport::dois_unparseable, "Unparseable DOI mentions"},
    {"records_malformed", &RunReport::records_malformed, "Malformed deposit records"},
    {"fulltext_unavailable", &RunReport::fulltext_unavailable, "Full texts unavailable"},
    {"packages_failed", &RunReport::packages_failed, "Failed packages"},
};

}  // namespace

RunReport& RunReport::operator+=(const RunReport& o) {
  for (const auto& f : kFields) this->*f.member += o.*f.member;
  return *this;
}

std::vector<std::string> RunReport::invariant_violations() const {
  std::vector<std::string> out;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) out.push_back(what);
  };
  check(packages_kept <= packages_seen, "packages_kept <= packages_seen");
  check(packages_with_code_host <= packages_kept, "packages_with_code_host <= packages_kept");
  check(article_links_explicit + article_links_readme == article_links_total,
        "article_links_explicit + article_links_readme == article_links_total");
  check(python_packages_linked <= packages_kept, "python_packages_linked <= packages_kept");
  check(scripts_parsed + scripts_failed == scripts_discovered,
        "scripts_parsed + scripts_failed == scripts_discovered");
  check(packages_scholarly <= python_packages_linked, "packages_scholarly <= python_packages_linked");
  check(graphs_ingested <= packages_scholarly, "graphs_ingested <= packages_scholarly");
  check(packages_failed <= packages_seen, "packages_failed <= packages_seen");
  return out;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : kFields) j[f.key] = this->*f.member;
  return j;
}

RunReport RunReport::from_json(const nlohmann::json& j) {
  RunReport r;
  for (const auto& f : kFields) r.*f.member = j.value(f.key, std::uint64_t{0});
  return r;
}

std::string RunReport::to_table() const {
  std::size_t width = std::string_view("Statistic").size();
  for (const auto& f : kFields) width = std::max(width, std::string_view(f.label).size());
  std::ostringstream out;
  auto row = [&](std::string_view label, const std::string& value) {
    out << label << std::string(width - label.size() + 2, ' ') << value << '\n';
  };
  row("Statistic", "Count");
  out << std::string(width + 2 + 5, '-') << '\n';
  for (const auto& f : kFields) row(f.label, std::to_string(this->*f.member));
  return out.str();
}

// ---- package ledger ----------------------------------------------------------

nlohmann::json PackageOutcome::to_json() const {
  nlohmann::json j{{"deposit_id", deposit_id},
                   {"doi", doi},
                   {"stage", stage},
                   {"counters", counters.to_json()}};
  j["error"] = error ? nlohmann::json(*error) : nlohmann::json();
  return j;
}

PackageOutcome PackageOutcome::from_json(const nlohmann::json& j) {
  PackageOutcome o;
  o.deposit_id = j.at("deposit_id").get<std::string>();
  o.doi = j.at("doi").get<std::string>();
  o.stage = j.at("stage").get<std::string>();
  o.counters = RunReport::from_json(j.at("counters"));
  if (j.contains("error") && j.at("error").is_string()) o.error = j.at("error").get<std::string>();
  return o;
}

PackageLedger::PackageLedger(fs::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (!fs::exists(path_, ec)) return;
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
      auto o = PackageOutcome::from_json(nlohmann::json::parse(line));
      entries_[doi::canonical_key(o.doi)] = std::move(o);
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::LedgerCorrupt, path_.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
}

void PackageLedger::append(const PackageOutcome& outcome) {
  std::lock_guard<std::mutex> guard(mutex_);
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  append_line_locked(path_, outcome.to_json().dump());
  entries_[doi::canonical_key(outcome.doi)] = outcome;
}

RunReport PackageLedger::aggregate() const {
  RunReport total;
  for (const auto& [key, o] : entries_) total += o.counters;
  return total;
}

fs::path package_ledger_path(const PipelineConfig& c) { return c.cache_dir / "package-ledger.jsonl"; }
fs::path ingest_ledger_path(const PipelineConfig& c) { return c.cache_dir / "ingest-ledger.jsonl"; }

// ---- run ---------------------------------------------------------------------

namespace {

void ensure_writable(const fs::path& dir) {
  try {
    fs::create_directories(dir);
    auto probe = dir / ".write-probe";
    atomic_write_file(probe, "ok");
    fs::remove(probe);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, "directory not writable: " + dir.string() + ": " + e.what());
  }
}

void write_artifact(const fs::path& path, const nlohmann::json& j) {
  atomic_write_file(path, j.dump(2) + "\n");
}

struct Context {
  const PipelineConfig& config;
  http::Client& client;
  analysis::Registries registries;
  scholarly::FulltextResolver& resolver;
  kg::IngestLedger& ingest_ledger;
  kg::SinkConfig sink;
  kg::Vocabulary vocab;
  fs::path graph_dir;
};

void process_package(Context& ctx, const harvester::PackageRecord& record, PackageOutcome& out) {
  RunReport& c = out.counters;
  const auto& cfg = ctx.config;
  c.packages_seen = 1;
  out.stage = "harvested";

  auto decision = harvester::filter_package(record, {cfg.size_limit_bytes, false});
  if (!decision.keep) {
    spdlog::info("{}: dropped ({})", record.doi, harvester::to_string(decision.reason));
    out.stage = "filtered";
    return;
  }
  if (record.size_bytes > cfg.size_limit_bytes) throw std::logic_error("kept package exceeds size limit");
  c.packages_kept = 1;

  auto workdir = cfg.cache_dir / "packages";
  auto manifest = harvester::fetch_package_archive(ctx.client, record, workdir);
  out.stage = "fetched";
  auto dir = harvester::deposit_dir(workdir, record);
  write_artifact(dir / "record.json", harvester::to_json(record));
  fs::path root = manifest.tree / manifest.root;

  auto readme = metadata::load_readme(root);
  std::optional<std::string> readme_text;
  if (readme) readme_text = readme->text;
  auto host = harvester::resolve_code_host(ctx.client, {cfg.code_host_api, cfg.code_host_token}, record,
                                           readme_text);
  out.stage = "code_host";
  write_artifact(dir / "codehost.json",
                 host ? nlohmann::json{{"url", host->url},
                                       {"languages", host->languages},
                                       {"languages_failed", host->languages_failed}}
                      : nlohmann::json());
  if (host) c.packages_with_code_host = 1;
  if (!host && cfg.require_code_host) {
    spdlog::info("{}: no code-host URL", record.doi);
    return;
  }

  auto meta = metadata::extract_package_metadata(record, readme);
  if (host && !host->languages.empty()) meta.languages = host->languages;
  write_artifact(dir / "metadata.json", meta.to_json());
  out.stage = "metadata";
  c.article_links_explicit = meta.explicit_link_count();
  c.article_links_readme = meta.readme_link_count();
  c.article_links_total = meta.article_links.size();
  c.dois_unparseable = meta.unparseable_dois;
  if (meta.article_links.empty()) {
    spdlog::info("{}: no linked article", record.doi);
    return;
  }

  auto scripts = analysis::discover_scripts(root);
  if (scripts.empty()) {
    spdlog::info("{}: no Python scripts", record.doi);
    return;
  }
  auto pa = analysis::analyze_package(root, ctx.registries);
  write_artifact(dir / "analysis.json", pa.to_json());
  out.stage = "analyzed";
  c.python_packages_linked = 1;
  c.scripts_discovered = pa.scripts_discovered;
  c.scripts_parsed = pa.scripts_analyzed;
  c.scripts_failed = pa.scripts_discovered - pa.scripts_analyzed;

  std::vector<std::string> terms;
  terms.reserve(pa.terms.size());
  for (const auto& t : pa.terms) terms.push_back(t.text);

  struct Hit {
    metadata::ArticleLink link;
    scholarly::TermMatchReport report;
  };
  std::vector<Hit> hits;
  for (const auto& link : meta.article_links) {
    scholarly::TermMatchReport report;
    report.doi = link.doi;
    if (!terms.empty()) {
      try {
        auto doc = ctx.resolver.resolve(link.doi);
        report = scholarly::match_terms(terms, doc, cfg.match_threshold);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoOpenAccessLocation && e.code() != ErrorCode::ExtractionFailed) throw;
        spdlog::info("{}: full text of {} unavailable: {}", record.doi, link.doi, e.what());
        ++c.fulltext_unavailable;
        continue;
      }
    }
    write_artifact(dir / ("match-" + doi::slug(doi::canonical_key(link.doi)) + ".json"), report.to_json());
    if (report.scholarly) hits.push_back({link, std::move(report)});
  }
  out.stage = "matched";
  if (hits.empty()) return;
  c.packages_scholarly = 1;

  for (const auto& hit : hits) {
    kg::GraphInputs in;
    in.package_doi = record.doi;
    in.metadata = &meta;
    if (host) in.code_host_url = host->url;
    in.link = hit.link;
    in.report = &hit.report;
    in.records = &pa.records;
    auto graph = kg::build_contribution_graph(in, ctx.vocab);
    auto receipt = kg::ingest(graph, ctx.sink, &ctx.client, ctx.ingest_ledger, cfg.force);
    if (ctx.sink.mode == kg::SinkConfig::Mode::Http) {
      kg::SinkConfig files{kg::SinkConfig::Mode::File, {}, {}, ctx.graph_dir};
      fs::create_directories(ctx.graph_dir);
      atomic_write_file(kg::ntriples_path(files, graph), kg::serialize_ntriples(graph.triples));
    }
    spdlog::info("{} -> {}: graph {}{}", record.doi, hit.link.doi, kg::to_string(receipt.status),
                 receipt.replayed ? " (replayed)" : "");
  }
  c.graphs_ingested = 1;
  out.stage = "ingested";
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg, Services services) {
  cfg.validate();
  ensure_writable(cfg.cache_dir);
  ensure_writable(cfg.output_dir);

  analysis::Registries registries =
      cfg.registry ? analysis::Registries::load(*cfg.registry) : analysis::Registries::defaults();

  if (!services.transport) {
    services.transport = std::make_shared<http::CurlTransport>(std::chrono::seconds(cfg.http_timeout_seconds));
  }
  if (!services.sleeper) services.sleeper = http::real_sleeper();
  if (!services.extractor) services.extractor = std::make_shared<scholarly::ExternalConverter>(cfg.pdf_converter);
  auto limiter = std::make_shared<http::RateLimiter>(cfg.requests_per_second, std::max(1.0, cfg.requests_per_second));
  http::Client client(services.transport, services.retry.value_or(http::RetryPolicy{}), limiter, services.sleeper);
  client.set_cache_dir(cfg.cache_dir / "http");

  PackageLedger package_ledger(package_ledger_path(cfg));
  kg::IngestLedger ingest_ledger(ingest_ledger_path(cfg));
  scholarly::FulltextResolver resolver(client, {cfg.oa_resolver, cfg.oa_email}, cfg.cache_dir,
                                       services.extractor);

  kg::SinkConfig sink;
  fs::path graph_dir = cfg.output_dir / "graphs";
  if (cfg.dry_run || cfg.graph_endpoint.empty()) {
    sink = {kg::SinkConfig::Mode::File, {}, {}, graph_dir};
  } else {
    sink = {kg::SinkConfig::Mode::Http, cfg.graph_endpoint, cfg.graph_token, {}};
  }
  Context ctx{cfg, client, std::move(registries), resolver, ingest_ledger, sink, kg::Vocabulary(cfg.graph_base_iri),
              graph_dir};

  // Harvest. Failure on the first page is fatal; later pages end the harvest.
  RunReport report;
  bool harvest_truncated = false;
  std::vector<harvester::PackageRecord> records;
  std::set<std::string> seen;
  harvester::HarvestQuery query{cfg.repository_api, cfg.resource_type, cfg.repository_query, cfg.page_size};
  std::optional<std::string> cursor;
  bool first = true;
  while (cfg.limit == 0 || records.size() < cfg.limit) {
    harvester::HarvestPage page;
    try {
      page = harvester::list_deposits(client, query, cursor);
    } catch (const Error& e) {
      if (first) throw;
      spdlog::error("harvest stopped early: {}", e.what());
      harvest_truncated = true;
      break;
    }
    first = false;
    report.records_malformed += page.skipped;
    for (auto& r : page.records) {
      if (cfg.limit != 0 && records.size() >= cfg.limit) break;
      if (!seen.insert(doi::canonical_key(r.doi)).second) {
        spdlog::debug("duplicate deposit {}", r.doi);
        continue;
      }
      records.push_back(std::move(r));
    }
    if (!page.next_cursor) break;
    cursor = page.next_cursor;
  }
  spdlog::info("harvested {} deposits", records.size());

  // Resume: completed packages contribute their recorded counters.
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (cfg.resume) {
      auto it = package_ledger.entries().find(doi::canonical_key(records[i].doi));
      if (it != package_ledger.entries().end() && !it->second.error) {
        report += it->second.counters;
        continue;
      }
    }
    todo.push_back(i);
  }

  std::vector<PackageOutcome> outcomes(todo.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const auto& record = records[todo[k]];
      auto& out = outcomes[k];
      out.deposit_id = record.deposit_id;
      out.doi = record.doi;
      try {
        process_package(ctx, record, out);
      } catch (const Error& e) {
        spdlog::error("{}: failed at stage {}: {}", record.doi, out.stage, e.what());
        out.error = std::string(to_string(e.code())) + ": " + e.what();
        out.counters.packages_failed = 1;
      } catch (const std::exception& e) {
        spdlog::error("{}: failed at stage {}: {}", record.doi, out.stage, e.what());
        out.error = e.what();
        out.counters.packages_failed = 1;
      }
      package_ledger.append(out);
    }
  };
  std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), todo.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  if (n_threads > 0) worker();
  for (auto& t : pool) t.join();

  for (const auto& o : outcomes) report += o.counters;

  auto violations = report.invariant_violations();
  if (!violations.empty()) {
    std::string msg = "run report invariants violated:";
    for (const auto& v : violations) msg += " [" + v + "]";
    throw std::logic_error(msg);
  }

  atomic_write_file(cfg.output_dir / "run_report.json", report.to_json().dump(2) + "\n");
  atomic_write_file(cfg.output_dir / "run_report.txt", report.to_table());

  RunResult result;
  result.report = report;
  result.network_calls = client.network_calls();
  result.exit_code = (report.packages_failed > 0 || harvest_truncated) ? kExitPackageFailures : kExitOk;
  result.outcomes = std::move(outcomes);
  return result;
}

}  // namespace scholex::pipeline
