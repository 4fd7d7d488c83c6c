// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace scholex {

std::string sha256_hex(std::string_view bytes);
std::string md5_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary then renames over `path`, so readers
/// see either the old file or the complete new one.
void atomic_write_file(const std::filesystem::path& path, std::string_view bytes);

/// Appends one line under an exclusive advisory lock.
void append_line_locked(const std::filesystem::path& path, std::string_view line);

struct DecodedText {
  std::string text;
  bool lossy = false;  ///< invalid sequences were replaced with U+FFFD
};

DecodedText decode_utf8_lossy(std::string_view bytes);

/// RFC 3986 percent-encoding; unreserved characters pass through.
std::string url_encode(std::string_view text);

std::string to_lower_ascii(std::string_view text);

}  // namespace scholex
