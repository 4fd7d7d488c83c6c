// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

// Five synthetic deposits served from a fixture server:
//   1001, 1002  oversize (500 MB and 400 MB + 1 byte)
//   1003        code-host URL, Python script, no linked article
//   1004        explicit isSupplementTo article, one script that fails to parse
//   1005        README-mined articles (one without open access), badge self-DOI
// plus one malformed hit without a DOI.

#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include "fixture_server.hpp"
#include "scholex/pipeline.hpp"

namespace fixture {

class Corpus {
 public:
  explicit Corpus(Server& server);

  scholex::pipeline::PipelineConfig config(const std::filesystem::path& work) const;
  /// Collaborators with instant retries.
  static scholex::pipeline::Services services();
  /// Counters computed by hand from the deposit contents above.
  static scholex::pipeline::RunReport expected();

  static std::string svr_script();

 private:
  Server& server_;
};

/// Generic graph endpoint under `prefix`: POST {prefix}/resources returns
/// ids r1, r2, ...; POST {prefix}/statements returns s1, s2, ...
void install_graph_sink(Server& server, const std::string& prefix, std::shared_ptr<std::atomic<int>> counter);

}  // namespace fixture
