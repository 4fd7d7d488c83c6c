// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "scholex/dataflow.hpp"
#include "scholex/error.hpp"
#include "scholex/pipeline.hpp"
#include "scholex/python_ast.hpp"
#include "scholex/scholarly.hpp"
#include "scholex/util.hpp"

namespace fs = std::filesystem;
using namespace scholex;

namespace {

int cmd_run(const fs::path& config_path, bool dry_run, std::optional<std::size_t> limit,
            std::optional<fs::path> registry, bool resume, bool force) {
  pipeline::PipelineConfig cfg;
  try {
    cfg = pipeline::load_config(config_path);
    if (dry_run) cfg.dry_run = true;
    if (limit) cfg.limit = *limit;
    if (registry) cfg.registry = fs::absolute(*registry);
    cfg.resume = resume;
    cfg.force = force;
    cfg.validate();
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return pipeline::kExitConfig;
  }

  try {
    auto result = pipeline::run_pipeline(cfg);
    std::cout << result.report.to_table();
    spdlog::info("report written to {}", (cfg.output_dir / "run_report.json").string());
    return result.exit_code;
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return e.code() == ErrorCode::Config ? pipeline::kExitConfig : pipeline::kExitFatal;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return pipeline::kExitFatal;
  }
}

int cmd_analyze(const fs::path& dir, std::optional<fs::path> registry) {
  auto reg = registry ? analysis::Registries::load(*registry) : analysis::Registries::defaults();
  std::error_code ec;
  if (fs::is_regular_file(dir, ec)) {
    auto parsed = python::parse_script(read_file(dir), dir.filename().string());
    if (auto* f = std::get_if<python::ParseFailure>(&parsed)) {
      nlohmann::json err{{"source_path", f->source_path}, {"line", f->line}, {"column", f->column},
                         {"message", f->message}};
      std::cout << err.dump(2) << '\n';
      return 4;
    }
    auto record = analysis::extract_dataflow(std::get<python::ScriptTree>(parsed), reg);
    nlohmann::json out = analysis::to_json(record);
    out["terms"] = analysis::to_json(analysis::extract_terms(record));
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::Io, "no such file or directory: " + dir.string());
  std::cout << analysis::analyze_package(dir, reg).to_json().dump(2) << '\n';
  return 0;
}

int cmd_match(const fs::path& terms_path, const fs::path& text_path, std::size_t threshold) {
  auto j = nlohmann::json::parse(read_file(terms_path));
  std::vector<std::string> terms;
  // Accept a plain list of strings or the analyzer's term objects.
  if (j.is_object() && j.contains("terms")) j = j.at("terms");
  if (!j.is_array()) throw Error(ErrorCode::Config, "terms file must hold a JSON array");
  for (const auto& t : j) {
    if (t.is_string()) terms.push_back(t.get<std::string>());
    else if (t.is_object() && t.contains("text")) terms.push_back(t.at("text").get<std::string>());
    else throw Error(ErrorCode::Config, "unexpected term entry: " + t.dump());
  }
  scholarly::FulltextDocument doc;
  doc.text = decode_utf8_lossy(read_file(text_path)).text;
  doc.source_url = text_path.string();
  auto report = scholarly::match_terms(terms, doc, threshold);
  std::cout << report.to_json().dump(2) << '\n';
  return report.scholarly ? 0 : 4;
}

int cmd_report(const fs::path& ledger_path, bool json) {
  pipeline::PackageLedger ledger(ledger_path);
  auto report = ledger.aggregate();
  if (json) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    std::cout << report.to_table();
  }
  auto violations = report.invariant_violations();
  for (const auto& v : violations) spdlog::error("invariant violated: {}", v);
  return violations.empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("scholex");
  spdlog::set_default_logger(logger);

  CLI::App app{"scholex: scholarly knowledge from research software packages"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  auto* run = app.add_subcommand("run", "Harvest, analyze, match and build graphs");
  std::string config;
  bool dry_run = false, resume = false, force = false;
  std::optional<std::size_t> limit;
  std::optional<std::string> registry;
  run->add_option("--config", config, "Config file (key = value)")->required()->check(CLI::ExistingFile);
  run->add_flag("--dry-run", dry_run, "Write N-Triples files instead of posting to the graph endpoint");
  run->add_option("--limit", limit, "Process at most N packages");
  run->add_option("--registry", registry, "Source/sink registry JSON")->check(CLI::ExistingFile);
  run->add_flag("--resume", resume, "Skip packages completed in the package ledger");
  run->add_flag("--force", force, "Re-ingest graphs whose ledger hash differs");

  auto* analyze = app.add_subcommand("analyze", "Analyze a Python script or directory, JSON to stdout");
  std::string analyze_path;
  std::optional<std::string> analyze_registry;
  analyze->add_option("path", analyze_path, "Script or package directory")->required();
  analyze->add_option("--registry", analyze_registry, "Source/sink registry JSON")->check(CLI::ExistingFile);

  auto* match = app.add_subcommand("match", "Match terms against a plain-text article");
  std::string terms_file, text_file;
  std::size_t threshold = 1;
  match->add_option("terms", terms_file, "JSON array of terms")->required()->check(CLI::ExistingFile);
  match->add_option("text", text_file, "UTF-8 text file")->required()->check(CLI::ExistingFile);
  match->add_option("--threshold", threshold, "Matched terms needed to call a package scholarly")
      ->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Aggregate a package ledger into a run report");
  std::string ledger;
  bool report_json = false;
  report->add_option("ledger", ledger, "package-ledger.jsonl")->required()->check(CLI::ExistingFile);
  report->add_flag("--json", report_json, "JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : pipeline::kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::err : spdlog::level::info);

  try {
    if (*run) {
      std::optional<fs::path> reg;
      if (registry) reg = *registry;
      return cmd_run(config, dry_run, limit, reg, resume, force);
    }
    if (*analyze) {
      std::optional<fs::path> reg;
      if (analyze_registry) reg = *analyze_registry;
      return cmd_analyze(analyze_path, reg);
    }
    if (*match) return cmd_match(terms_file, text_file, threshold);
    if (*report) return cmd_report(ledger, report_json);
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return e.code() == ErrorCode::Config ? pipeline::kExitConfig : pipeline::kExitFatal;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return pipeline::kExitFatal;
  }
  return 0;
}
