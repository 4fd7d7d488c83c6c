// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace scholex::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Request {
  std::string method = "GET";
  std::string url;
  Headers headers;
  std::string body;
};

struct Response {
  int status = 0;
  std::map<std::string, std::string> headers;  ///< keys lower-cased
  std::string body;

  std::optional<std::string> header(const std::string& lower_name) const;
};

/// Transport seam. Implementations throw NetworkError when no HTTP
/// response was obtained at all; any status code is returned as-is.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response send(const Request& request) = 0;
};

class CurlTransport final : public Transport {
 public:
  explicit CurlTransport(std::chrono::seconds timeout = std::chrono::seconds(60));
  Response send(const Request& request) override;

 private:
  std::chrono::seconds timeout_;
};

std::string host_of(const std::string& url);

/// Token bucket keyed by host. `acquire` blocks until a token is free.
class RateLimiter {
 public:
  RateLimiter(double tokens_per_second, double burst);
  void acquire(const std::string& host);

 private:
  struct Bucket {
    double tokens;
    std::chrono::steady_clock::time_point last;
  };
  double rate_;
  double burst_;
  std::mutex mutex_;
  std::map<std::string, Bucket> buckets_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

/// Everything above the transport: retry with exponential backoff,
/// Retry-After handling, per-host rate limiting, a call counter and an
/// optional content cache for idempotent GETs.
class Client {
 public:
  Client(std::shared_ptr<Transport> transport, RetryPolicy retry = {},
         std::shared_ptr<RateLimiter> limiter = nullptr,
         Sleeper sleeper = real_sleeper());

  /// Disk cache for GET bodies; nullopt disables it.
  void set_cache_dir(std::optional<std::filesystem::path> dir);

  /// GET returning the body of a 2xx response. 429 → RateLimited after
  /// retries are exhausted; other 4xx → EndpointRejected; 5xx and
  /// transport failures → NetworkError after retries.
  std::string get(const std::string& url, const Headers& headers = {},
                  bool use_cache = true);

  nlohmann::json get_json(const std::string& url, const Headers& headers = {},
                          bool use_cache = true);

  /// Non-idempotent call; never cached, still retried on transport
  /// failure and 5xx.
  Response post_json(const std::string& url, const nlohmann::json& body,
                     const Headers& headers = {});

  /// Number of requests actually handed to the transport.
  std::size_t network_calls() const noexcept { return calls_.load(); }

 private:
  Response send_with_retry(const Request& request);

  std::shared_ptr<Transport> transport_;
  RetryPolicy retry_;
  std::shared_ptr<RateLimiter> limiter_;
  Sleeper sleeper_;
  std::optional<std::filesystem::path> cache_dir_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace scholex::http
