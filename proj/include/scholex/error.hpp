// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>

namespace scholex {

enum class ErrorCode {
  Network,
  RateLimited,
  MalformedResponse,
  CorruptArchive,
  UnsafeArchiveEntry,
  NoOpenAccessLocation,
  ExtractionFailed,
  NotScholarly,
  InvalidIri,
  EndpointRejected,
  LedgerConflict,
  LedgerCorrupt,
  Config,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Base of every error the library throws. The code is the
/// machine-readable kind; what() carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  bool retryable() const noexcept {
    return code_ == ErrorCode::Network || code_ == ErrorCode::RateLimited;
  }

 private:
  ErrorCode code_;
};

class NetworkError : public Error {
 public:
  explicit NetworkError(const std::string& message)
      : Error(ErrorCode::Network, message) {}
};

class RateLimited : public Error {
 public:
  RateLimited(const std::string& message, std::chrono::seconds retry_after)
      : Error(ErrorCode::RateLimited, message), retry_after_(retry_after) {}

  std::chrono::seconds retry_after() const noexcept { return retry_after_; }

 private:
  std::chrono::seconds retry_after_;
};

class EndpointRejected : public Error {
 public:
  EndpointRejected(int status, std::string body)
      : Error(ErrorCode::EndpointRejected,
              "endpoint rejected request with HTTP " + std::to_string(status)),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace scholex
