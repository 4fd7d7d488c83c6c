// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/scholarly.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "scholex/doi.hpp"
#include "scholex/error.hpp"
#include "scholex/util.hpp"

extern char** environ;

namespace scholex::scholarly {

const char* to_string(ExtractionMethod m) {
  return m == ExtractionMethod::PlainTextSidecar ? "plain_text_sidecar" : "external_pdf_to_text";
}

// ---- external converter ------------------------------------------------

ExternalConverter::ExternalConverter(std::string command) {
  std::istringstream in(command);
  for (std::string word; in >> word;) argv_.push_back(word);
  if (argv_.empty()) throw Error(ErrorCode::Config, "empty PDF converter command");
  ::signal(SIGPIPE, SIG_IGN);
}

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw Error(ErrorCode::Io, std::strerror(errno));
  }
  ~Pipe() { close_both(); }
  void close_end(int i) {
    if (fd[i] >= 0) ::close(fd[i]);
    fd[i] = -1;
  }
  void close_both() {
    close_end(0);
    close_end(1);
  }
};

}  // namespace

std::string ExternalConverter::extract(std::string_view pdf) {
  Pipe in, out;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in.fd[0], 0);
  posix_spawn_file_actions_adddup2(&actions, out.fd[1], 1);
  posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);

  std::vector<char*> argv;
  for (auto& a : argv_) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = 0;
  int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw Error(ErrorCode::ExtractionFailed,
                "cannot start converter '" + argv_[0] + "': " + std::strerror(rc));
  }
  in.close_end(0);
  out.close_end(1);

  int stdin_fd = in.fd[1];
  in.fd[1] = -1;
  std::thread writer([stdin_fd, pdf] {
    std::size_t done = 0;
    while (done < pdf.size()) {
      ssize_t n = ::write(stdin_fd, pdf.data() + done, pdf.size() - done);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      done += static_cast<std::size_t>(n);
    }
    ::close(stdin_fd);
  });
  std::string text;
  char buf[65536];
  for (;;) {
    ssize_t n = ::read(out.fd[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    text.append(buf, static_cast<std::size_t>(n));
  }
  writer.join();
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(ErrorCode::ExtractionFailed, "converter '" + argv_[0] + "' exited with status " +
                                                 std::to_string(WEXITSTATUS(status)));
  }
  bool blank = std::all_of(text.begin(), text.end(),
                           [](unsigned char c) { return std::isspace(c); });
  if (blank) throw Error(ErrorCode::ExtractionFailed, "converter produced no text");
  return text;
}

// ---- resolver ------------------------------------------------------------

FulltextResolver::FulltextResolver(http::Client& client, ResolverConfig config,
                                   std::filesystem::path cache_dir,
                                   std::shared_ptr<TextExtractor> extractor)
    : client_(client),
      config_(std::move(config)),
      dir_(std::move(cache_dir) / "fulltext"),
      extractor_(std::move(extractor)) {}

std::filesystem::path FulltextResolver::sidecar_path(const std::string& doi) const {
  return dir_ / (doi::slug(doi::canonical_key(doi)) + ".txt");
}

std::shared_ptr<std::mutex> FulltextResolver::lock_for(const std::string& key) {
  std::lock_guard<std::mutex> guard(locks_mutex_);
  auto& m = locks_[key];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

FulltextDocument FulltextResolver::resolve(const std::string& identifier) {
  const std::string doi = doi::normalize(identifier).value_or(identifier);
  std::string key = doi::canonical_key(doi);
  auto lock = lock_for(key);
  std::lock_guard<std::mutex> guard(*lock);

  auto sidecar = sidecar_path(doi);
  std::error_code ec;
  if (std::filesystem::is_regular_file(sidecar, ec)) {
    std::string text = read_file(sidecar);
    if (!text.empty()) {
      return {doi, std::move(text), "file://" + std::filesystem::absolute(sidecar).string(),
              ExtractionMethod::PlainTextSidecar};
    }
  }
  auto negative = dir_ / (doi::slug(key) + ".unavailable.json");
  if (std::filesystem::is_regular_file(negative, ec)) {
    auto j = nlohmann::json::parse(read_file(negative), nullptr, false);
    std::string message = j.is_object() ? j.value("message", "") : "";
    throw Error(ErrorCode::NoOpenAccessLocation, message.empty() ? "no open-access location" : message);
  }
  try {
    return resolve_uncached(doi);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoOpenAccessLocation) {
      std::filesystem::create_directories(dir_);
      atomic_write_file(negative, nlohmann::json{{"doi", doi}, {"message", e.what()}}.dump() + "\n");
    }
    throw;
  }
}

namespace {

std::optional<std::string> string_field(const nlohmann::json& j, const char* key) {
  if (j.is_object() && j.contains(key) && j.at(key).is_string()) {
    std::string v = j.at(key).get<std::string>();
    if (!v.empty()) return v;
  }
  return std::nullopt;
}

std::optional<std::string> location_url(const nlohmann::json& loc) {
  if (auto pdf = string_field(loc, "url_for_pdf")) return pdf;
  return string_field(loc, "url");
}

std::string encode_doi_path(std::string_view doi) {
  std::string out;
  std::size_t start = 0;
  while (start <= doi.size()) {
    auto slash = doi.find('/', start);
    std::string_view part = doi.substr(start, slash == std::string_view::npos ? doi.npos : slash - start);
    out += url_encode(part);
    if (slash == std::string_view::npos) break;
    out.push_back('/');
    start = slash + 1;
  }
  return out;
}

}  // namespace

FulltextDocument FulltextResolver::resolve_uncached(const std::string& doi) {
  std::string url = config_.base_url + "/v2/" + encode_doi_path(doi) + "?email=" + url_encode(config_.email);
  nlohmann::json meta;
  try {
    meta = client_.get_json(url);
  } catch (const EndpointRejected& e) {
    if (e.status() == 404) {
      throw Error(ErrorCode::NoOpenAccessLocation, "resolver does not know " + doi);
    }
    throw;
  }
  std::optional<std::string> target;
  if (meta.is_object() && meta.contains("best_oa_location")) {
    target = location_url(meta.at("best_oa_location"));
  }
  if (!target && meta.is_object() && meta.contains("oa_locations") && meta.at("oa_locations").is_array()) {
    for (const auto& loc : meta.at("oa_locations")) {
      if ((target = location_url(loc))) break;
    }
  }
  if (!target) throw Error(ErrorCode::NoOpenAccessLocation, "no open-access location for " + doi);

  std::string bytes = client_.get(*target);
  if (bytes.rfind("%PDF", 0) != 0) {
    throw Error(ErrorCode::ExtractionFailed, "document at " + *target + " is not a PDF");
  }
  if (!extractor_) throw Error(ErrorCode::ExtractionFailed, "no PDF converter configured");
  std::string text = decode_utf8_lossy(extractor_->extract(bytes)).text;
  std::filesystem::create_directories(dir_);
  atomic_write_file(sidecar_path(doi), text);
  spdlog::debug("extracted {} bytes of text for {}", text.size(), doi);
  return {doi, std::move(text), *target, ExtractionMethod::ExternalPdfToText};
}

// ---- matching ------------------------------------------------------------

namespace {

bool boundary_code_point(char32_t cp) {
  if (cp < 0x80) {
    return !(std::isalnum(static_cast<int>(cp)) || cp == '_' || cp == '.');
  }
  return (cp >= 0x00A0 && cp <= 0x00BF) || cp == 0x00D7 || cp == 0x00F7 ||
         (cp >= 0x2000 && cp <= 0x2BFF) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFE30 && cp <= 0xFE4F) || (cp >= 0xFF01 && cp <= 0xFF0F) || cp == 0xFFFD;
}

char32_t decode_at(std::string_view s, std::size_t i) {
  auto b = static_cast<unsigned char>(s[i]);
  if (b < 0x80) return b;
  int extra = b >= 0xF0 ? 3 : b >= 0xE0 ? 2 : b >= 0xC0 ? 1 : 0;
  char32_t cp = b & (0x3F >> extra);
  for (int k = 1; k <= extra && i + static_cast<std::size_t>(k) < s.size(); ++k) {
    cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3F);
  }
  return cp;
}

bool boundary_before(std::string_view s, std::size_t pos) {
  if (pos == 0) return true;
  std::size_t start = pos - 1;
  while (start > 0 && pos - start < 4 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) {
    --start;
  }
  return boundary_code_point(decode_at(s, start));
}

// A dot directly after a match is sentence punctuation when it ends the
// text or is itself followed by a boundary.
bool boundary_after(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return true;
  if (s[pos] == '.') return pos + 1 >= s.size() || boundary_code_point(decode_at(s, pos + 1));
  return boundary_code_point(decode_at(s, pos));
}

std::size_t count_lowered(std::string_view text, std::string_view term) {
  if (term.empty()) return 0;
  std::size_t count = 0;
  for (std::size_t pos = text.find(term); pos != std::string_view::npos;
       pos = text.find(term, pos + 1)) {
    if (boundary_before(text, pos) && boundary_after(text, pos + term.size())) ++count;
  }
  return count;
}

}  // namespace

std::size_t count_occurrences(std::string_view text, std::string_view term) {
  return count_lowered(to_lower_ascii(text), to_lower_ascii(term));
}

TermMatchReport match_terms(const std::vector<std::string>& terms, const FulltextDocument& doc,
                            std::size_t threshold) {
  TermMatchReport report;
  report.doi = doc.doi;
  std::string text = to_lower_ascii(doc.text);
  std::vector<std::string> seen;
  for (const auto& term : terms) {
    if (std::find(seen.begin(), seen.end(), term) != seen.end()) continue;
    seen.push_back(term);
    std::size_t n = count_lowered(text, to_lower_ascii(term));
    if (n > 0) {
      report.matched.push_back({term, n});
    } else {
      report.unmatched.push_back(term);
    }
  }
  report.scholarly = threshold > 0 ? report.matched.size() >= threshold : !report.matched.empty();
  return report;
}

bool TermMatchReport::is_matched(std::string_view term) const {
  return std::any_of(matched.begin(), matched.end(), [&](const TermCount& t) { return t.term == term; });
}

nlohmann::json TermMatchReport::to_json() const {
  auto m = nlohmann::json::array();
  for (const auto& t : matched) m.push_back({{"term", t.term}, {"count", t.count}});
  return {{"doi", doi}, {"matched", m}, {"unmatched", unmatched}, {"scholarly", scholarly}};
}

TermMatchReport TermMatchReport::from_json(const nlohmann::json& j) {
  TermMatchReport r;
  r.doi = j.at("doi").get<std::string>();
  for (const auto& t : j.at("matched")) {
    r.matched.push_back({t.at("term").get<std::string>(), t.at("count").get<std::size_t>()});
  }
  r.unmatched = j.at("unmatched").get<std::vector<std::string>>();
  r.scholarly = j.at("scholarly").get<bool>();
  return r;
}

}  // namespace scholex::scholarly
