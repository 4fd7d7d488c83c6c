// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace fixture {

struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::vector<std::pair<std::string, std::string>> headers;
};

using Handler = std::function<Reply(const httplib::Request&)>;

/// Loopback HTTP server with exact-path routes and a request log.
class Server {
 public:
  Server();
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  const std::string& url() const { return url_; }

  void route(const std::string& method, const std::string& path, Handler handler);
  void json(const std::string& path, const nlohmann::json& body, int status = 200);
  void bytes(const std::string& path, std::string body, std::string content_type = "application/octet-stream");

  /// "METHOD /path?query" per request, in arrival order.
  std::vector<std::string> requests() const;
  std::size_t request_count() const;
  std::size_t count_prefix(const std::string& prefix) const;
  std::vector<nlohmann::json> posted(const std::string& path) const;
  void clear_log();

 private:
  void dispatch(const httplib::Request& req, httplib::Response& res);

  httplib::Server server_;
  std::thread thread_;
  std::string url_;
  mutable std::mutex mutex_;
  std::map<std::string, Handler> routes_;
  std::vector<std::string> log_;
  std::vector<std::pair<std::string, nlohmann::json>> posts_;
};

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct ArchiveEntry {
  std::string name;
  std::string data;
};

/// Stored (uncompressed) zip.
std::string make_zip(const std::vector<ArchiveEntry>& entries);
/// ustar archive, gzip-compressed.
std::string make_tar_gz(const std::vector<ArchiveEntry>& entries);

std::string md5_of(const std::string& bytes);

}  // namespace fixture
