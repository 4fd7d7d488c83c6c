// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "corpus.hpp"
#include "fixture_server.hpp"
#include "scholex/error.hpp"
#include "scholex/harvester.hpp"
#include "scholex/util.hpp"

using namespace scholex;
using namespace scholex::harvester;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Shape of one hit of the repository records endpoint.
json hit(int id, const std::string& doi, std::uint64_t size = 10) {
  return {{"id", id},
          {"doi", doi},
          {"metadata", {{"title", "pkg " + std::to_string(id)}}},
          {"files", json::array({{{"key", "pkg.zip"}, {"size", size}, {"links", {{"self", "https://f/" + doi}}}}})}};
}

std::unique_ptr<http::Client> make_client() {
  return std::make_unique<http::Client>(std::make_shared<http::CurlTransport>(std::chrono::seconds(5)),
                                        http::RetryPolicy{3, std::chrono::milliseconds(1)}, nullptr,
                                        [](std::chrono::milliseconds) {});
}

PackageRecord record_with_size(std::uint64_t size) {
  PackageRecord r;
  r.deposit_id = "1";
  r.doi = "10.5281/zenodo.1";
  r.size_bytes = size;
  return r;
}

}  // namespace

TEST_SUITE("harvester") {
  TEST_CASE("page with two records and a next link") {
    fixture::Server server;
    server.json("/api/records", {{"hits", {{"total", 4}, {"hits", json::array({hit(1, "10.5281/zenodo.1"),
                                                                               hit(2, "10.5281/zenodo.2")})}}},
                                 {"links", {{"next", server.url() + "/api/records?page=2"}}}});
    auto client_ptr = make_client();
    auto& client = *client_ptr;
    HarvestQuery q{server.url() + "/api", "software", "", 2};
    auto page = list_deposits(client, q, std::nullopt);
    REQUIRE(page.records.size() == 2);
    CHECK(page.records[0].deposit_id == "1");
    CHECK(page.records[1].doi == "10.5281/zenodo.2");
    CHECK(page.next_cursor == server.url() + "/api/records?page=2");
    CHECK(page.total_hint == 4);
    CHECK(page.skipped == 0);
    auto reqs = server.requests();
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].find("type=software") != std::string::npos);
  }

  TEST_CASE("empty hit list is the final page") {
    auto page = parse_page({{"hits", {{"hits", json::array()}}}});
    CHECK(page.records.empty());
    CHECK_FALSE(page.next_cursor.has_value());
  }

  TEST_CASE("record without DOI is skipped and counted") {
    json broken = hit(2, "x");
    broken.erase("doi");
    auto page = parse_page({{"hits", {{"hits", json::array({hit(1, "10.5281/zenodo.1"), broken,
                                                             hit(3, "10.5281/zenodo.3")})}}}});
    CHECK(page.records.size() == 2);
    CHECK(page.skipped == 1);
  }

  TEST_CASE("unreadable page is MalformedResponse") {
    CHECK_THROWS_AS(parse_page(json::array()), Error);
    fixture::Server server;
    server.bytes("/api/records", "<html>", "text/html");
    auto client_ptr = make_client();
    auto& client = *client_ptr;
    try {
      list_deposits(client, {server.url() + "/api", "software", "", 25}, std::nullopt);
      FAIL("expected MalformedResponse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedResponse);
    }
  }

  TEST_CASE("record fields") {
    auto r = parse_record({{"id", 7},
                           {"doi", "10.5281/zenodo.7"},
                           {"conceptdoi", "10.5281/zenodo.6"},
                           {"metadata",
                            {{"title", "T"},
                             {"related_identifiers",
                              json::array({{{"relation", "isSupplementTo"}, {"identifier", "10.1/x"}, {"scheme", "doi"}},
                                           {{"relation", "isDocumentedBy"}, {"identifier", "u"}, {"scheme", "url"}}})}}},
                           {"files", json::array({{{"key", "a.zip"}, {"size", 3}, {"links", {{"self", "s"}}}},
                                                  {{"key", "b.txt"}, {"size", 4}, {"links", {{"self", "t"}}}}})}});
    REQUIRE(r.has_value());
    CHECK(r->size_bytes == 7);  // sum of file sizes
    CHECK(r->concept_doi == "10.5281/zenodo.6");
    REQUIRE(r->relations.size() == 2);
    CHECK(r->relations[0].kind == RelationKind::IsSupplementTo);
    CHECK(r->relations[1].kind == RelationKind::Other);
    CHECK(r->relations[1].kind_text == "isDocumentedBy");
    CHECK(record_from_json(to_json(*r)) == *r);
  }

  TEST_CASE("pagination is exhaustive and duplicate-free") {
    fixture::Server server;
    fixture::Corpus corpus(server);
    auto client_ptr = make_client();
    auto& client = *client_ptr;
    HarvestQuery q{server.url() + "/api", "software", "", 3};
    std::vector<std::string> ids;
    std::size_t skipped = 0;
    std::optional<std::string> cursor;
    int pages = 0;
    do {
      auto page = list_deposits(client, q, cursor);
      for (const auto& r : page.records) ids.push_back(r.deposit_id);
      skipped += page.skipped;
      cursor = page.next_cursor;
      REQUIRE(++pages < 10);
    } while (cursor);
    CHECK(ids == std::vector<std::string>{"1001", "1002", "1003", "1004", "1005"});
    CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size());
    CHECK(skipped == 1);
  }

  TEST_CASE("size filter boundaries") {
    FilterLimits limits;
    CHECK(filter_package(record_with_size(500'000'000), limits).reason == FilterReason::TooLarge);
    CHECK_FALSE(filter_package(record_with_size(500'000'000), limits).keep);
    CHECK(filter_package(record_with_size(0), limits).keep);
    CHECK(filter_package(record_with_size(400'000'000), limits).keep);
    CHECK_FALSE(filter_package(record_with_size(400'000'001), limits).keep);
    // MB is decimal: 400 MiB exceeds the limit.
    CHECK_FALSE(filter_package(record_with_size(400ULL * 1024 * 1024), limits).keep);
  }

  TEST_CASE("code-host eligibility") {
    FilterLimits limits{400'000'000, true};
    auto r = record_with_size(1);
    CHECK(filter_package(r, limits).reason == FilterReason::NoCodeHost);
    r.code_host_url = "https://github.com/x/y";
    CHECK(filter_package(r, limits).keep);
  }

  TEST_CASE("fetch, verify and unpack; warm cache is offline and byte-identical") {
    fixture::Server server;
    fixture::TempDir tmp;
    auto zip = fixture::make_zip({{"pkg-1.0/a.py", "x = 1\n"}, {"pkg-1.0/README.md", "# pkg\n"}});
    server.bytes("/files/pkg.zip", zip);
    PackageRecord r;
    r.deposit_id = "9";
    r.doi = "10.5281/zenodo.9";
    r.files = {{"pkg.zip", server.url() + "/files/pkg.zip", zip.size(), "md5:" + fixture::md5_of(zip)}};
    r.size_bytes = zip.size();

    auto client_ptr = make_client();
    auto& client = *client_ptr;
    auto m = fetch_package_archive(client, r, tmp.path());
    CHECK(m.paths == std::vector<std::string>{"pkg-1.0/README.md", "pkg-1.0/a.py"});
    CHECK(m.root == "pkg-1.0");
    REQUIRE(m.files.size() == 1);
    CHECK(m.files[0].sha256 == sha256_hex(zip));
    auto manifest_path = deposit_dir(tmp.path(), r) / "manifest.json";
    auto first = read_file(manifest_path);

    auto calls = client.network_calls();
    auto again = fetch_package_archive(client, r, tmp.path());
    CHECK(client.network_calls() == calls);
    CHECK(read_file(manifest_path) == first);
    CHECK(again.paths == m.paths);
  }

  TEST_CASE("truncated download is CorruptArchive and leaves nothing behind") {
    fixture::Server server;
    fixture::TempDir tmp;
    auto zip = fixture::make_zip({{"a.py", std::string(3000, 'x')}, {"b.py", std::string(3000, 'y')}});
    auto half = zip.substr(0, zip.size() / 2);
    server.bytes("/files/bad.zip", half);
    PackageRecord r;
    r.deposit_id = "8";
    r.doi = "10.5281/zenodo.8";
    r.files = {{"bad.zip", server.url() + "/files/bad.zip", half.size(), ""}};
    auto client_ptr = make_client();
    auto& client = *client_ptr;
    try {
      fetch_package_archive(client, r, tmp.path());
      FAIL("expected CorruptArchive");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CorruptArchive);
    }
    CHECK_FALSE(fs::exists(deposit_dir(tmp.path(), r)));
  }

  TEST_CASE("checksum mismatch is CorruptArchive") {
    fixture::Server server;
    fixture::TempDir tmp;
    auto zip = fixture::make_zip({{"a.py", "x\n"}});
    server.bytes("/files/p.zip", zip);
    PackageRecord r;
    r.deposit_id = "7";
    r.doi = "10.5281/zenodo.7";
    r.files = {{"p.zip", server.url() + "/files/p.zip", zip.size(), "md5:00000000000000000000000000000000"}};
    auto client_ptr = make_client();
    auto& client = *client_ptr;
    CHECK_THROWS_AS(fetch_package_archive(client, r, tmp.path()), Error);
  }

  TEST_CASE("code host from relation with ordered languages") {
    fixture::Server server;
    server.json("/gh/repos/x/y/languages", {{"Shell", 3}, {"Python", 120}});
    auto client_ptr = make_client();
    auto& client = *client_ptr;
    PackageRecord r;
    r.relations.push_back({RelationKind::Other, "isSupplementedBy", "https://github.com/x/y/tree/v1", IdScheme::Url, "url"});
    auto info = resolve_code_host(client, {server.url() + "/gh", std::nullopt}, r, std::nullopt);
    REQUIRE(info.has_value());
    CHECK(info->url == "https://github.com/x/y");
    CHECK(info->languages == std::vector<std::string>{"Python", "Shell"});
    CHECK_FALSE(info->languages_failed);
  }

  TEST_CASE("code host from README; languages failure keeps URL") {
    fixture::Server server;
    auto client_ptr = make_client();
    auto& client = *client_ptr;
    PackageRecord r;
    auto info = resolve_code_host(client, {server.url() + "/gh", std::nullopt}, r,
                                  std::string("Code lives at https://github.com/org/tool.git now"));
    REQUIRE(info.has_value());
    CHECK(info->url == "https://github.com/org/tool");
    CHECK(info->languages_failed);
  }

  TEST_CASE("no code host anywhere") {
    auto client_ptr = make_client();
    auto& client = *client_ptr;
    CHECK_FALSE(resolve_code_host(client, {}, PackageRecord{}, std::string("no links here")).has_value());
  }

  TEST_CASE("language ordering ties break by name") {
    CHECK(order_languages({{"R", 10}, {"C", 10}, {"Python", 50}}) ==
          std::vector<std::string>{"Python", "C", "R"});
    CHECK(order_languages(json::object()).empty());
  }

  TEST_CASE("code-host URL normalization") {
    CHECK(normalize_code_host_url("git@github.com:a/b.git") == "https://github.com/a/b");
    CHECK(normalize_code_host_url("https://github.com/a/b#readme") == "https://github.com/a/b");
    CHECK_FALSE(normalize_code_host_url("https://github.com/orgs/x").has_value());
    CHECK_FALSE(normalize_code_host_url("https://gitlab.com/a/b").has_value());
  }
}
