// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "corpus.hpp"
#include "fixture_server.hpp"
#include "oracles.hpp"
#include "scholex/error.hpp"
#include "scholex/kg.hpp"
#include "scholex/util.hpp"

using namespace scholex;
using namespace scholex::kg;

namespace {

struct Fixture {
  metadata::PackageMetadata meta;
  scholarly::TermMatchReport report;
  std::vector<analysis::DataflowRecord> records;

  Fixture() {
    meta.name = "svr-deconv";
    meta.description = "Estimates \"cell-type\" proportions.\nSecond line\twith tab \\ and caf\xC3\xA9";
    meta.languages = {"Python", "Shell"};
    auto parsed = python::parse_script(fixture::Corpus::svr_script(), "svr_deconvolution.py");
    records.push_back(analysis::extract_dataflow(std::get<python::ScriptTree>(parsed),
                                                 analysis::Registries::defaults()));
    report.doi = "10.1186/s12920-019-0613-5";
    report.matched = {{"Sample", 1}, {"Reference", 1}, {"LinearSVR", 1}};
    report.unmatched = {"read_csv", "svr.fit", "to_csv"};
    report.scholarly = true;
  }

  GraphInputs inputs() const {
    GraphInputs in;
    in.package_doi = "10.5281/zenodo.1004";
    in.metadata = &meta;
    in.code_host_url = "https://github.com/fixture/svr-deconv";
    in.link = {"10.1186/s12920-019-0613-5", metadata::Provenance::ExplicitIsSupplementTo, std::nullopt};
    in.report = &report;
    in.records = &records;
    return in;
  }
};

oracle::Term to_oracle(const NodeRef& n) { return {n.is_iri(), n.value, n.datatype}; }

std::set<oracle::Triple> as_oracle(const std::vector<KnowledgeTriple>& ts) {
  std::set<oracle::Triple> out;
  for (const auto& t : ts) out.insert({to_oracle(t.subject), to_oracle(t.predicate), to_oracle(t.object)});
  return out;
}

std::set<oracle::Triple> reparse(const std::string& nt) {
  auto v = oracle::read_ntriples(nt);
  return {v.begin(), v.end()};
}

std::unique_ptr<http::Client> make_client() {
  return std::make_unique<http::Client>(std::make_shared<http::CurlTransport>(std::chrono::seconds(5)),
                                        http::RetryPolicy{3, std::chrono::milliseconds(1)}, nullptr,
                                        [](std::chrono::milliseconds) {});
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

std::string random_literal(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"a", "Z", " ", "\"", "\\", "\n", "\r", "\t", "\b", "\f",
                                                  "\x01", "\x1F", "\x7F", "'", "<", ">", "\xC3\xA9",
                                                  "\xE2\x9C\x93", "\xF0\x9F\x93\x88", "^^", "."};
  int n = std::uniform_int_distribution<int>(0, 24)(rng);
  std::string out;
  for (int i = 0; i < n; ++i) out += pieces[std::uniform_int_distribution<std::size_t>(0, pieces.size() - 1)(rng)];
  return out;
}

}  // namespace

TEST_SUITE("kg") {
  TEST_CASE("contribution graph for the reference package") {
    Fixture f;
    Vocabulary v;
    auto g = build_contribution_graph(f.inputs(), v);
    CHECK(g.paper_node.value == "https://w3id.org/scholex/paper/10.1186_s12920-019-0613-5");
    CHECK(g.software_node.value == "https://w3id.org/scholex/software/10.5281_zenodo.1004");
    CHECK(g.contribution_node.value ==
          "https://w3id.org/scholex/contribution/10.1186_s12920-019-0613-5/10.5281_zenodo.1004");
    CHECK(std::is_sorted(g.triples.begin(), g.triples.end()));
    CHECK(std::adjacent_find(g.triples.begin(), g.triples.end()) == g.triples.end());

    auto has = [&](const NodeRef& s, std::string_view pred, const NodeRef& o) {
      return std::find(g.triples.begin(), g.triples.end(), KnowledgeTriple{s, NodeRef::iri(v.term(pred)), o}) !=
             g.triples.end();
    };
    CHECK(has(g.paper_node, "hasContribution", g.contribution_node));
    CHECK(has(g.contribution_node, "hasSupplement", g.software_node));
    CHECK(has(g.contribution_node, "usesData", NodeRef::iri(v.concept_term("Sample"))));
    CHECK(has(g.contribution_node, "usesData", NodeRef::iri(v.concept_term("Reference"))));
    CHECK(has(g.contribution_node, "usesMethod", NodeRef::iri(v.concept_term("LinearSVR"))));
    CHECK_FALSE(has(g.contribution_node, "usesMethod", NodeRef::iri(v.concept_term("to_csv"))));
    CHECK(has(g.contribution_node, "matchedTermCount", NodeRef::literal("3", std::string(kXsdInteger))));
    CHECK(has(g.software_node, "usesLanguage", NodeRef::literal("Shell")));
    CHECK(has(g.software_node, "hasCodeRepository",
              NodeRef::literal("https://github.com/fixture/svr-deconv", std::string(kXsdAnyUri))));
  }

  TEST_CASE("unmatched reports do not produce graphs") {
    Fixture f;
    f.report.matched.clear();
    f.report.scholarly = false;
    CHECK(code_of([&] { build_contribution_graph(f.inputs(), Vocabulary()); }) == ErrorCode::NotScholarly);
  }

  TEST_CASE("N-Triples re-parse to the same triple set and bytes are stable") {
    Fixture f;
    auto g = build_contribution_graph(f.inputs(), Vocabulary());
    std::string nt = serialize_ntriples(g.triples);
    CHECK(reparse(nt) == as_oracle(g.triples));
    CHECK(serialize_ntriples(g.triples) == nt);

    auto shuffled = g.triples;
    std::mt19937_64 rng(3);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.push_back(shuffled.front());
    CHECK(serialize_ntriples(shuffled) == nt);
    CHECK(nt.back() == '\n');
    CHECK(nt.find("\\\"cell-type\\\"") != std::string::npos);
    CHECK(nt.find("\\n") != std::string::npos);
  }

  TEST_CASE("property: random literals and terms round-trip") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 200; ++round) {
      Fixture f;
      f.meta.name = random_literal(rng);
      f.meta.description = random_literal(rng);
      f.meta.languages = {random_literal(rng)};
      f.report.matched = {{random_literal(rng) + "x", 1}, {"Sample", 2}};
      auto g = build_contribution_graph(f.inputs(), Vocabulary("http://kg.example.org/base/"));
      std::string nt = serialize_ntriples(g.triples);
      CAPTURE(nt);
      CHECK(reparse(nt) == as_oracle(g.triples));
      CHECK(serialize_ntriples(g.triples) == nt);
      CHECK(std::count(nt.begin(), nt.end(), '\n') == static_cast<long>(g.triples.size()));
    }
  }

  TEST_CASE("invalid IRIs are rejected") {
    CHECK(is_valid_iri("https://w3id.org/x"));
    CHECK(is_valid_iri("urn:isbn:123"));
    CHECK_FALSE(is_valid_iri("no-scheme"));
    CHECK_FALSE(is_valid_iri("http://a b"));
    CHECK_FALSE(is_valid_iri("http://a/<b>"));
    CHECK_FALSE(is_valid_iri("1http://a"));
    std::vector<KnowledgeTriple> bad{{NodeRef::iri("http://a b"), NodeRef::iri("http://p"), NodeRef::literal("x")}};
    CHECK(code_of([&] { serialize_ntriples(bad); }) == ErrorCode::InvalidIri);
    std::vector<KnowledgeTriple> lit_subject{{NodeRef::literal("s"), NodeRef::iri("http://p"), NodeRef::literal("x")}};
    CHECK(code_of([&] { serialize_ntriples(lit_subject); }) == ErrorCode::InvalidIri);
  }

  TEST_CASE("file ingestion writes once and replays") {
    Fixture f;
    auto g = build_contribution_graph(f.inputs(), Vocabulary());
    fixture::TempDir dir;
    SinkConfig sink{SinkConfig::Mode::File, "", std::nullopt, dir / "graphs"};
    IngestLedger ledger(dir / "ingest.jsonl");

    auto r1 = ingest(g, sink, nullptr, ledger);
    CHECK(r1.status == IngestStatus::DryRunWritten);
    CHECK_FALSE(r1.replayed);
    auto path = ntriples_path(sink, g);
    CHECK(path.filename() == "10.5281_zenodo.1004__10.1186_s12920-019-0613-5.nt");
    CHECK(read_file(path) == serialize_ntriples(g.triples));

    auto r2 = ingest(g, sink, nullptr, ledger);
    CHECK(r2.replayed);
    CHECK(r2.graph_hash == r1.graph_hash);

    // A fresh ledger object sees the same history.
    IngestLedger reopened(dir / "ingest.jsonl");
    REQUIRE(reopened.find(g.package_doi, g.article_doi));
    CHECK(reopened.find(g.package_doi, g.article_doi)->receipt.graph_hash == r1.graph_hash);
    std::filesystem::remove(path);
    CHECK(ingest(g, sink, nullptr, reopened).replayed);
    CHECK(std::filesystem::exists(path));
  }

  TEST_CASE("a changed graph conflicts unless forced") {
    Fixture f;
    auto g = build_contribution_graph(f.inputs(), Vocabulary());
    fixture::TempDir dir;
    SinkConfig sink{SinkConfig::Mode::File, "", std::nullopt, dir / "graphs"};
    IngestLedger ledger(dir / "ingest.jsonl");
    ingest(g, sink, nullptr, ledger);

    f.report.matched.push_back({"svr.fit", 1});
    auto g2 = build_contribution_graph(f.inputs(), Vocabulary());
    CHECK(code_of([&] { ingest(g2, sink, nullptr, ledger); }) == ErrorCode::LedgerConflict);
    auto forced = ingest(g2, sink, nullptr, ledger, true);
    CHECK_FALSE(forced.replayed);
    CHECK(read_file(ntriples_path(sink, g2)) == serialize_ntriples(g2.triples));
    CHECK(ingest(g2, sink, nullptr, ledger).replayed);
  }

  TEST_CASE("HTTP ingestion posts resources then statements") {
    fixture::Server server;
    auto calls = std::make_shared<std::atomic<int>>(0);
    fixture::install_graph_sink(server, "/kg", calls);
    Fixture f;
    auto g = build_contribution_graph(f.inputs(), Vocabulary());
    fixture::TempDir dir;
    SinkConfig sink{SinkConfig::Mode::Http, server.url() + "/kg/", std::string("sink-token"), {}};
    IngestLedger ledger(dir / "ingest.jsonl");
    auto client = make_client();

    auto r = ingest(g, sink, client.get(), ledger);
    CHECK(r.status == IngestStatus::Ingested);
    std::set<std::string> nodes;
    std::size_t statements = 0;
    for (const auto& t : g.triples) {
      nodes.insert(t.subject.value);
      if (t.object.is_iri()) nodes.insert(t.object.value);
      statements += t.predicate.value != kRdfType && t.predicate.value != kRdfsLabel;
    }
    CHECK(r.created_ids.size() == nodes.size());
    CHECK(server.posted("/kg/resources").size() == nodes.size());
    CHECK(server.posted("/kg/statements").size() == statements);
    std::set<std::string> ids;
    for (const auto& [iri, id] : r.created_ids) ids.insert(id);
    for (std::size_t k = 1; k <= nodes.size(); ++k) CHECK(ids.count("r" + std::to_string(k)));

    // Resources first, then statements.
    auto log = server.requests();
    auto first_statement = std::find_if(log.begin(), log.end(), [](const std::string& l) {
      return l.rfind("POST /kg/statements", 0) == 0;
    });
    CHECK(std::none_of(first_statement, log.end(),
                       [](const std::string& l) { return l.rfind("POST /kg/resources", 0) == 0; }));

    int before = *calls;
    auto again = ingest(g, sink, client.get(), ledger);
    CHECK(again.replayed);
    CHECK(again.created_ids == r.created_ids);
    CHECK(*calls == before);

    SinkConfig wrong = sink;
    wrong.token = "bad";
    IngestLedger other(dir / "other.jsonl");
    CHECK(code_of([&] { ingest(g, wrong, client.get(), other); }) == ErrorCode::EndpointRejected);
  }

  TEST_CASE("ledger tolerates a torn last line and rejects corruption") {
    Fixture f;
    auto g = build_contribution_graph(f.inputs(), Vocabulary());
    fixture::TempDir dir;
    SinkConfig sink{SinkConfig::Mode::File, "", std::nullopt, dir / "graphs"};
    {
      IngestLedger ledger(dir / "ingest.jsonl");
      ingest(g, sink, nullptr, ledger);
    }
    std::string good = read_file(dir / "ingest.jsonl");
    {
      std::ofstream(dir / "ingest.jsonl", std::ios::app) << R"({"package_doi":"10.1/x","art)";
    }
    IngestLedger torn(dir / "ingest.jsonl");
    CHECK(torn.find(g.package_doi, g.article_doi));
    CHECK_FALSE(torn.find("10.1/x", "10.1/y"));

    std::ofstream(dir / "bad.jsonl") << "not json\n" << good;
    CHECK(code_of([&] { IngestLedger bad(dir / "bad.jsonl"); }) == ErrorCode::LedgerCorrupt);
  }

  TEST_CASE("receipt JSON round trip") {
    IngestionReceipt r;
    r.endpoint = "http://x";
    r.created_ids = {{"http://a", "r1"}};
    r.status = IngestStatus::Ingested;
    r.graph_hash = "abc";
    auto back = IngestionReceipt::from_json(r.to_json());
    CHECK(back.endpoint == r.endpoint);
    CHECK(back.created_ids == r.created_ids);
    CHECK(back.status == r.status);
    CHECK(back.graph_hash == r.graph_hash);
  }
}
