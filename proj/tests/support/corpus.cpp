// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "corpus.hpp"

#include <fstream>
#include <sstream>

namespace fixture {

namespace {

using nlohmann::json;

json file_entry(const std::string& base, const std::string& id, const std::string& key, std::uint64_t size,
                const std::string& md5) {
  json f{{"key", key}, {"size", size}, {"links", {{"self", base + "/files/" + id + "/" + key}}}};
  if (!md5.empty()) f["checksum"] = "md5:" + md5;
  return f;
}

json deposit(const std::string& id, const std::string& title, json files, json related = json::array(),
             std::string description = "") {
  json meta{{"title", title}, {"related_identifiers", std::move(related)}};
  if (!description.empty()) meta["description"] = description;
  return {{"id", std::stoll(id)}, {"doi", "10.5281/zenodo." + id}, {"metadata", meta}, {"files", std::move(files)}};
}

json rel(const std::string& relation, const std::string& identifier, const std::string& scheme) {
  return {{"relation", relation}, {"identifier", identifier}, {"scheme", scheme}};
}

std::string pdf(const std::string& text) { return "%PDF-1.4\n" + text; }

}  // namespace

std::string Corpus::svr_script() {
  std::ifstream in(std::string(SCHOLEX_FIXTURE_DIR) + "/scripts/svr_deconvolution.py", std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Corpus::Corpus(Server& server) : server_(server) {
  const std::string base = server_.url();

  std::string zip3 = make_zip({
      {"tool-1.0/README.md", "# tool\n\nA small tool.\n\nSource: https://github.com/fixture/tool\n"},
      {"tool-1.0/main.py", "x = pd.read_csv('data.csv')\nx.to_csv('out.csv')\n"},
  });
  std::string zip4 = make_zip({
      {"svr-deconv-1.0/README.md", "# svr-deconv\n\nDeconvolution of mixed samples.\n"},
      {"svr-deconv-1.0/svr_deconvolution.py", svr_script()},
      {"svr-deconv-1.0/legacy.py", "print \"hello\"\n"},
  });
  std::string zip5 = make_zip({
      {"README.md",
       "# countviz\n\n"
       "[![DOI](https://zenodo.org/badge/DOI/10.5281/zenodo.1005.svg)](https://doi.org/10.5281/zenodo.1005)\n\n"
       "Plots count tables. Code: https://github.com/fixture/countviz\n\n"
       "Method paper: https://doi.org/10.5555/fixture.2021.001\n"
       "Data description: doi:10.5555/fixture.missing\n"
       "Preprint: doi:TBD\n"},
      {"analysis.py",
       "import numpy as np\n"
       "import matplotlib.pyplot as plt\n"
       "from lib.helpers import double\n"
       "counts = pd.read_csv('counts.csv')\n"
       "logc = np.log(counts)\n"
       "plt.plot(logc)\n"
       "plt.savefig('figure.png')\n"},
      {"lib/helpers.py", "def double(x):\n    return x * 2\n"},
  });

  json page1{{"hits",
              {{"total", 6},
               {"hits",
                json::array({
                    deposit("1001", "Big simulation", json::array({file_entry(base, "1001", "big.zip", 500000000, "")}),
                            json::array({rel("isSupplementedBy", "https://github.com/fixture/big", "url")})),
                    deposit("1002", "Barely too big",
                            json::array({file_entry(base, "1002", "data.zip", 400000001, "")})),
                    deposit("1003", "tool",
                            json::array({file_entry(base, "1003", "tool-1.0.zip", zip3.size(), md5_of(zip3))})),
                })}}},
             {"links", {{"next", base + "/api/records?page=2&size=3&type=software"}}}};
  json page2{{"hits",
              {{"total", 6},
               {"hits",
                json::array({
                    deposit("1004", "SVR deconvolution",
                            json::array({file_entry(base, "1004", "svr-deconv-1.0.zip", zip4.size(), md5_of(zip4))}),
                            json::array({rel("isSupplementTo", "10.1186/s12920-019-0613-5", "doi"),
                                         rel("isVersionOf", "10.5281/zenodo.1000", "doi"),
                                         rel("isSupplementedBy", "https://github.com/fixture/svr-deconv", "url")}),
                            "Estimates cell-type proportions."),
                    deposit("1005", "countviz",
                            json::array({file_entry(base, "1005", "countviz.zip", zip5.size(), md5_of(zip5))})),
                    json{{"id", 1099}, {"metadata", {{"title", "record without DOI"}}}},
                })}}},
             {"links", json::object()}};

  server_.route("GET", "/api/records", [page1, page2](const httplib::Request& req) {
    std::string page = req.has_param("page") ? req.get_param_value("page") : "1";
    return Reply{200, (page == "2" ? page2 : page1).dump()};
  });
  server_.bytes("/files/1003/tool-1.0.zip", zip3);
  server_.bytes("/files/1004/svr-deconv-1.0.zip", zip4);
  server_.bytes("/files/1005/countviz.zip", zip5);

  server_.json("/gh/repos/fixture/tool/languages", {{"Python", 800}});
  server_.json("/gh/repos/fixture/svr-deconv/languages", {{"Python", 5000}, {"Shell", 120}});
  server_.json("/gh/repos/fixture/countviz/languages", {{"Jupyter Notebook", 9000}, {"Python", 3000}});

  server_.json("/oa/v2/10.1186/s12920-019-0613-5",
               {{"doi", "10.1186/s12920-019-0613-5"},
                {"best_oa_location", {{"url_for_pdf", base + "/pdf/s12920.pdf"}, {"url", base + "/landing"}}}});
  server_.json("/oa/v2/10.5555/fixture.2021.001",
               {{"doi", "10.5555/fixture.2021.001"},
                {"best_oa_location", nullptr},
                {"oa_locations", json::array({{{"url_for_pdf", nullptr}, {"url", base + "/pdf/countviz.pdf"}}})}});
  server_.bytes("/pdf/s12920.pdf",
                pdf("Cell-type proportions were estimated from each Sample mixture against the\n"
                    "Reference expression profiles using LinearSVR with a linear kernel.\n"),
                "application/pdf");
  server_.bytes("/pdf/countviz.pdf", pdf("Raw counts were log-transformed before plotting.\n"), "application/pdf");
}

scholex::pipeline::PipelineConfig Corpus::config(const std::filesystem::path& work) const {
  scholex::pipeline::PipelineConfig c;
  c.repository_api = server_.url() + "/api";
  c.page_size = 3;
  c.code_host_api = server_.url() + "/gh";
  c.oa_resolver = server_.url() + "/oa";
  c.oa_email = "fixtures@example.org";
  c.cache_dir = work / "cache";
  c.output_dir = work / "out";
  c.workers = 2;
  c.pdf_converter = "sed 1d";
  c.requests_per_second = 1000;
  c.http_timeout_seconds = 10;
  return c;
}

scholex::pipeline::Services Corpus::services() {
  scholex::pipeline::Services s;
  s.sleeper = [](std::chrono::milliseconds) {};
  s.retry = scholex::http::RetryPolicy{3, std::chrono::milliseconds(1)};
  return s;
}

scholex::pipeline::RunReport Corpus::expected() {
  scholex::pipeline::RunReport r;
  r.packages_seen = 5;
  r.packages_kept = 3;            // 1003, 1004, 1005
  r.packages_with_code_host = 3;  // relation URL (1004), README URL (1003, 1005)
  r.article_links_explicit = 1;   // 1004 isSupplementTo
  r.article_links_readme = 2;     // 1005 method paper + data description; badge is the package itself
  r.article_links_total = 3;
  r.python_packages_linked = 2;   // 1004, 1005
  r.scripts_discovered = 4;       // svr_deconvolution.py, legacy.py, analysis.py, lib/helpers.py
  r.scripts_parsed = 3;
  r.scripts_failed = 1;           // legacy.py uses a print statement
  r.packages_scholarly = 2;       // Sample/Reference/LinearSVR; counts
  r.graphs_ingested = 2;
  r.dois_unparseable = 1;         // doi:TBD
  r.records_malformed = 1;        // hit 1099
  r.fulltext_unavailable = 1;     // 10.5555/fixture.missing has no resolver entry
  r.packages_failed = 0;
  return r;
}

void install_graph_sink(Server& server, const std::string& prefix, std::shared_ptr<std::atomic<int>> counter) {
  auto resources = std::make_shared<std::atomic<int>>(0);
  auto statements = std::make_shared<std::atomic<int>>(0);
  server.route("POST", prefix + "/resources", [resources, counter](const httplib::Request& req) {
    if (req.get_header_value("Authorization") != "Bearer sink-token") return Reply{401, R"({"error":"auth"})"};
    if (counter) ++*counter;
    return Reply{201, nlohmann::json{{"id", "r" + std::to_string(++*resources)}}.dump()};
  });
  server.route("POST", prefix + "/statements", [statements, counter](const httplib::Request& req) {
    if (req.get_header_value("Authorization") != "Bearer sink-token") return Reply{401, R"({"error":"auth"})"};
    if (counter) ++*counter;
    return Reply{201, nlohmann::json{{"id", "s" + std::to_string(++*statements)}}.dump()};
  });
}

}  // namespace fixture
