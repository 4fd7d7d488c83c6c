// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/http.hpp"

#include <curl/curl.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <thread>

#include "scholex/error.hpp"
#include "scholex/util.hpp"

namespace scholex::http {
namespace {

std::once_flag g_curl_init;

size_t write_body(char* ptr, size_t size, size_t nmemb, void* userdata) {
  auto* body = static_cast<std::string*>(userdata);
  body->append(ptr, size * nmemb);
  return size * nmemb;
}

size_t write_header(char* buffer, size_t size, size_t nitems, void* userdata) {
  auto* headers = static_cast<std::map<std::string, std::string>*>(userdata);
  std::string line(buffer, size * nitems);
  auto colon = line.find(':');
  if (colon != std::string::npos) {
    std::string name = to_lower_ascii(line.substr(0, colon));
    std::string value = line.substr(colon + 1);
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    value.erase(value.begin(), std::find_if(value.begin(), value.end(), not_space));
    value.erase(std::find_if(value.rbegin(), value.rend(), not_space).base(),
                value.end());
    (*headers)[name] = value;
  }
  return size * nitems;
}

std::chrono::seconds parse_retry_after(const Response& response) {
  auto value = response.header("retry-after");
  if (!value) return std::chrono::seconds(1);
  try {
    return std::chrono::seconds(std::max(0L, std::stol(*value)));
  } catch (const std::exception&) {
    return std::chrono::seconds(1);
  }
}

}  // namespace

std::optional<std::string> Response::header(const std::string& lower_name) const {
  auto it = headers.find(lower_name);
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

CurlTransport::CurlTransport(std::chrono::seconds timeout) : timeout_(timeout) {
  std::call_once(g_curl_init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

Response CurlTransport::send(const Request& request) {
  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(),
                                                           curl_easy_cleanup);
  if (!curl) throw NetworkError("curl_easy_init failed");

  Response response;
  curl_slist* header_list = nullptr;
  for (const auto& [name, value] : request.headers) {
    header_list = curl_slist_append(header_list, (name + ": " + value).c_str());
  }
  std::unique_ptr<curl_slist, decltype(&curl_slist_free_all)> headers_guard(
      header_list, curl_slist_free_all);

  curl_easy_setopt(curl.get(), CURLOPT_URL, request.url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_MAXREDIRS, 10L);
  curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT, static_cast<long>(timeout_.count()));
  curl_easy_setopt(curl.get(), CURLOPT_NOSIGNAL, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_USERAGENT, "scholex/0.1");
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, write_body);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &response.body);
  curl_easy_setopt(curl.get(), CURLOPT_HEADERFUNCTION, write_header);
  curl_easy_setopt(curl.get(), CURLOPT_HEADERDATA, &response.headers);
  if (header_list) curl_easy_setopt(curl.get(), CURLOPT_HTTPHEADER, header_list);
  if (request.method == "POST") {
    curl_easy_setopt(curl.get(), CURLOPT_POST, 1L);
    curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDS, request.body.data());
    curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDSIZE,
                     static_cast<long>(request.body.size()));
  } else if (request.method != "GET") {
    curl_easy_setopt(curl.get(), CURLOPT_CUSTOMREQUEST, request.method.c_str());
  }

  CURLcode rc = curl_easy_perform(curl.get());
  if (rc != CURLE_OK) {
    throw NetworkError(request.method + " " + request.url + ": " +
                       curl_easy_strerror(rc));
  }
  long status = 0;
  curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
  response.status = static_cast<int>(status);
  return response;
}

std::string host_of(const std::string& url) {
  auto scheme = url.find("://");
  std::size_t start = scheme == std::string::npos ? 0 : scheme + 3;
  auto end = url.find_first_of("/?#", start);
  return url.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

RateLimiter::RateLimiter(double tokens_per_second, double burst)
    : rate_(tokens_per_second), burst_(std::max(1.0, burst)) {}

void RateLimiter::acquire(const std::string& host) {
  if (rate_ <= 0) return;
  for (;;) {
    std::chrono::duration<double> wait{0};
    {
      std::lock_guard lock(mutex_);
      auto now = std::chrono::steady_clock::now();
      auto [it, inserted] = buckets_.try_emplace(host, Bucket{burst_, now});
      Bucket& bucket = it->second;
      std::chrono::duration<double> elapsed = now - bucket.last;
      bucket.tokens = std::min(burst_, bucket.tokens + elapsed.count() * rate_);
      bucket.last = now;
      if (bucket.tokens >= 1.0) {
        bucket.tokens -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - bucket.tokens) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Client::Client(std::shared_ptr<Transport> transport, RetryPolicy retry,
               std::shared_ptr<RateLimiter> limiter, Sleeper sleeper)
    : transport_(std::move(transport)),
      retry_(retry),
      limiter_(std::move(limiter)),
      sleeper_(std::move(sleeper)) {}

void Client::set_cache_dir(std::optional<std::filesystem::path> dir) {
  cache_dir_ = std::move(dir);
}

Response Client::send_with_retry(const Request& request) {
  auto backoff = retry_.initial_backoff;
  const int attempts = std::max(1, retry_.attempts);
  for (int attempt = 1;; ++attempt) {
    if (limiter_) limiter_->acquire(host_of(request.url));
    ++calls_;
    const bool last = attempt >= attempts;
    try {
      Response response = transport_->send(request);
      if (response.status == 429) {
        auto retry_after = parse_retry_after(response);
        if (last) {
          throw RateLimited("rate limited by " + host_of(request.url), retry_after);
        }
        auto delay = std::max<std::chrono::milliseconds>(backoff, retry_after);
        spdlog::warn("429 from {}, retrying in {} ms", host_of(request.url),
                     delay.count());
        sleeper_(delay);
      } else if (response.status >= 500) {
        if (last) {
          throw NetworkError(request.method + " " + request.url + ": HTTP " +
                             std::to_string(response.status));
        }
        sleeper_(backoff);
      } else {
        return response;
      }
    } catch (const NetworkError& e) {
      if (last) throw;
      spdlog::warn("{} (attempt {}/{})", e.what(), attempt, attempts);
      sleeper_(backoff);
    }
    backoff *= 2;
  }
}

std::string Client::get(const std::string& url, const Headers& headers,
                        bool use_cache) {
  std::optional<std::filesystem::path> cached;
  if (use_cache && cache_dir_) {
    cached = *cache_dir_ / (sha256_hex(url) + ".body");
    if (std::filesystem::exists(*cached)) return read_file(*cached);
  }
  Response response = send_with_retry(Request{"GET", url, headers, {}});
  if (response.status < 200 || response.status >= 300) {
    throw EndpointRejected(response.status, response.body);
  }
  if (cached) atomic_write_file(*cached, response.body);
  return std::move(response.body);
}

nlohmann::json Client::get_json(const std::string& url, const Headers& headers,
                                bool use_cache) {
  std::optional<std::filesystem::path> cached;
  if (use_cache && cache_dir_) {
    cached = *cache_dir_ / (sha256_hex(url) + ".json");
    if (std::filesystem::exists(*cached)) {
      return nlohmann::json::parse(read_file(*cached));
    }
  }
  std::string body = get(url, headers, false);
  nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(ErrorCode::MalformedResponse, "unreadable JSON from " + url);
  }
  // Only well-formed bodies are cached.
  if (cached) atomic_write_file(*cached, body);
  return parsed;
}

Response Client::post_json(const std::string& url, const nlohmann::json& body,
                           const Headers& headers) {
  Headers all = headers;
  all.emplace_back("Content-Type", "application/json");
  all.emplace_back("Accept", "application/json");
  return send_with_retry(Request{"POST", url, std::move(all), body.dump()});
}

}  // namespace scholex::http
