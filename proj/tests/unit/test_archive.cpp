// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "fixture_server.hpp"
#include "scholex/archive.hpp"
#include "scholex/error.hpp"

using namespace scholex;
namespace fs = std::filesystem;

namespace {

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
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

}  // namespace

TEST_SUITE("archive") {
  TEST_CASE("zip identity extraction") {
    fixture::TempDir tmp;
    auto zip = fixture::make_zip({{"a.py", "x = 1\n"}, {"README.md", "# pkg\n"}});
    REQUIRE(archive::detect("pkg.zip", zip) == archive::Format::Zip);
    auto paths = archive::extract(zip, archive::Format::Zip, tmp.path());
    CHECK(paths == std::vector<std::string>{"a.py", "README.md"});
    CHECK(files_under(tmp.path()) == std::vector<fs::path>{"README.md", "a.py"});
  }

  TEST_CASE("tar.gz extraction") {
    fixture::TempDir tmp;
    auto tgz = fixture::make_tar_gz({{"pkg/src/main.py", "print(1)\n"}, {"pkg/README", "hi\n"}});
    REQUIRE(archive::detect("pkg.tar.gz", tgz) == archive::Format::TarGz);
    auto paths = archive::extract(tgz, archive::Format::TarGz, tmp.path());
    CHECK(paths.size() == 2);
    CHECK(fs::exists(tmp.path() / "pkg/src/main.py"));
  }

  TEST_CASE("traversal entry rejects whole archive") {
    fixture::TempDir tmp;
    auto dest = tmp.path() / "dest";
    auto zip = fixture::make_zip({{"ok.txt", "fine"}, {"../../etc/x", "evil"}});
    CHECK(code_of([&] { archive::extract(zip, archive::Format::Zip, dest); }) == ErrorCode::UnsafeArchiveEntry);
    CHECK_FALSE(fs::exists(tmp.path() / "etc"));
    CHECK((!fs::exists(dest) || fs::is_empty(dest)));
  }

  TEST_CASE("truncated zip is corrupt") {
    fixture::TempDir tmp;
    auto zip = fixture::make_zip({{"a.py", std::string(4000, 'a')}, {"b.py", std::string(4000, 'b')}});
    zip.resize(zip.size() / 2);
    CHECK(code_of([&] { archive::extract(zip, archive::Format::Zip, tmp.path()); }) == ErrorCode::CorruptArchive);
  }

  TEST_CASE("safe_relative_path") {
    CHECK(archive::safe_relative_path("./a//b") == "a/b");
    CHECK_FALSE(archive::safe_relative_path("/etc/passwd").has_value());
    CHECK_FALSE(archive::safe_relative_path("a/../../b").has_value());
    CHECK_FALSE(archive::safe_relative_path("C:\\x").has_value());
    CHECK_FALSE(archive::safe_relative_path("..").has_value());
  }

  TEST_CASE("property: adversarial entry names never escape the destination") {
    std::mt19937_64 rng(20260401);
    const std::vector<std::string> parts = {"a", "b", "..", ".", "", "/", "c.py", "..\\..", "x/../..", "~"};
    for (int round = 0; round < 200; ++round) {
      fixture::TempDir tmp;
      auto dest = tmp.path() / "d";
      std::vector<fixture::ArchiveEntry> entries;
      int n = std::uniform_int_distribution<int>(1, 4)(rng);
      for (int i = 0; i < n; ++i) {
        std::string name;
        int k = std::uniform_int_distribution<int>(1, 4)(rng);
        for (int j = 0; j < k; ++j) {
          if (j) name += "/";
          name += parts[std::uniform_int_distribution<std::size_t>(0, parts.size() - 1)(rng)];
        }
        if (name.empty() || name.back() == '/') name += "f";
        entries.push_back({name, "data"});
      }
      bool tgz = round % 2 == 1;
      auto bytes = tgz ? fixture::make_tar_gz(entries) : fixture::make_zip(entries);
      try {
        archive::extract(bytes, tgz ? archive::Format::TarGz : archive::Format::Zip, dest);
      } catch (const Error&) {
      }
      for (const auto& f : files_under(tmp.path())) {
        INFO("round " << round << " wrote " << f.string());
        CHECK(f.string().rfind("d/", 0) == 0);
      }
    }
  }
}
