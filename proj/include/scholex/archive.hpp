// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scholex::archive {

enum class Format { Zip, TarGz, Tar };

/// Sniffs magic bytes first, then falls back to the file name.
std::optional<Format> detect(std::string_view filename, std::string_view bytes);

struct Limits {
  std::uint64_t max_total_bytes = 4'000'000'000ULL;
  std::size_t max_entries = 200'000;
};

/// Checks an archive member name and returns it normalized
/// ("./a//b" -> "a/b"). nullopt for absolute paths, drive letters, and
/// any ".." component.
std::optional<std::string> safe_relative_path(std::string_view entry_name);

/// Extracts regular files under `dest`, returning their relative paths in
/// archive order. Every entry name is validated before the first byte is
/// written: one unsafe entry fails the whole archive with
/// UnsafeArchiveEntry. Symbolic and hard links are skipped. Damaged or
/// truncated input throws CorruptArchive.
std::vector<std::string> extract(std::string_view bytes, Format format,
                                 const std::filesystem::path& dest,
                                 const Limits& limits = {});

/// gzip (possibly multi-member) to raw bytes.
std::string gunzip(std::string_view bytes, std::uint64_t max_bytes);

}  // namespace scholex::archive
