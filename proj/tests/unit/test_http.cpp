// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <deque>

#include "fixture_server.hpp"
#include "scholex/error.hpp"
#include "scholex/http.hpp"

using namespace scholex;
using namespace std::chrono_literals;

namespace {

// Replays queued responses; an empty queue is a transport failure.
class ScriptedTransport final : public http::Transport {
 public:
  std::deque<http::Response> queue;
  std::vector<http::Request> seen;

  http::Response send(const http::Request& request) override {
    seen.push_back(request);
    if (queue.empty()) throw NetworkError("connection refused");
    auto r = queue.front();
    queue.pop_front();
    return r;
  }
};

struct Rig {
  std::shared_ptr<ScriptedTransport> transport = std::make_shared<ScriptedTransport>();
  std::vector<std::chrono::milliseconds> sleeps;
  http::Client client{transport, {}, nullptr, [this](std::chrono::milliseconds d) { sleeps.push_back(d); }};
};

}  // namespace

TEST_SUITE("http") {
  TEST_CASE("5xx is retried with exponential backoff from 1 s") {
    Rig rig;
    rig.transport->queue = {{503, {}, ""}, {502, {}, ""}, {200, {}, "ok"}};
    CHECK(rig.client.get("https://api.example.org/x") == "ok");
    CHECK(rig.client.network_calls() == 3);
    CHECK(rig.sleeps == std::vector<std::chrono::milliseconds>{1000ms, 2000ms});
  }

  TEST_CASE("transport failure exhausts three attempts") {
    Rig rig;
    CHECK_THROWS_AS(rig.client.get("https://api.example.org/x"), NetworkError);
    CHECK(rig.client.network_calls() == 3);
  }

  TEST_CASE("429 honours Retry-After and surfaces RateLimited") {
    Rig rig;
    http::Response limited{429, {{"retry-after", "5"}}, ""};
    rig.transport->queue = {limited, limited, limited};
    try {
      rig.client.get("https://api.example.org/x");
      FAIL("expected RateLimited");
    } catch (const RateLimited& e) {
      CHECK(e.retry_after() == 5s);
    }
    REQUIRE(rig.sleeps.size() == 2);
    CHECK(rig.sleeps[0] >= 5000ms);
  }

  TEST_CASE("4xx is not retried") {
    Rig rig;
    rig.transport->queue = {{404, {}, "missing"}};
    try {
      rig.client.get("https://api.example.org/x");
      FAIL("expected EndpointRejected");
    } catch (const EndpointRejected& e) {
      CHECK(e.status() == 404);
    }
    CHECK(rig.client.network_calls() == 1);
  }

  TEST_CASE("GET cache serves repeats without network") {
    fixture::TempDir tmp;
    Rig rig;
    rig.client.set_cache_dir(tmp.path());
    rig.transport->queue = {{200, {}, R"({"a":1})"}};
    CHECK(rig.client.get_json("https://api.example.org/j")["a"] == 1);
    CHECK(rig.client.get_json("https://api.example.org/j")["a"] == 1);
    CHECK(rig.client.network_calls() == 1);
  }

  TEST_CASE("malformed JSON is not cached") {
    fixture::TempDir tmp;
    Rig rig;
    rig.client.set_cache_dir(tmp.path());
    rig.transport->queue = {{200, {}, "{oops"}, {200, {}, R"({"a":2})"}};
    CHECK_THROWS_AS(rig.client.get_json("https://api.example.org/j"), Error);
    CHECK(rig.client.get_json("https://api.example.org/j")["a"] == 2);
  }

  TEST_CASE("POST is never cached") {
    fixture::TempDir tmp;
    Rig rig;
    rig.client.set_cache_dir(tmp.path());
    rig.transport->queue = {{201, {}, "{}"}, {201, {}, "{}"}};
    rig.client.post_json("https://api.example.org/p", {{"x", 1}});
    rig.client.post_json("https://api.example.org/p", {{"x", 1}});
    CHECK(rig.client.network_calls() == 2);
    CHECK(rig.transport->seen[0].method == "POST");
  }

  TEST_CASE("token bucket delays beyond the burst") {
    http::RateLimiter limiter(20.0, 1.0);
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 3; ++i) limiter.acquire("api.example.org");
    CHECK(std::chrono::steady_clock::now() - start >= 90ms);
  }

  TEST_CASE("curl transport against a loopback server") {
    fixture::Server server;
    server.json("/hello", {{"greeting", "hi"}});
    http::Client client(std::make_shared<http::CurlTransport>(5s));
    CHECK(client.get_json(server.url() + "/hello")["greeting"] == "hi");
    CHECK_THROWS_AS(client.get(server.url() + "/nope"), EndpointRejected);
    CHECK(server.count_prefix("GET /hello") == 1);
  }
}
