#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <map>
#include <memory>

#include "evver/error.hpp"
#include "evver/fetch.hpp"
#include "test_support.hpp"

namespace evver {
namespace {

using namespace std::chrono_literals;

struct FakeTime {
  Clock::time_point now{};
  std::vector<std::chrono::steady_clock::duration> sleeps;
};

Clock fake_clock(std::shared_ptr<FakeTime> t) {
  Clock c;
  c.now = [t] { return t->now; };
  c.sleep_for = [t](std::chrono::steady_clock::duration d) {
    t->sleeps.push_back(d);
    t->now += d;
  };
  return c;
}

class ScriptedClient : public HttpClient {
 public:
  std::map<std::string, std::vector<HttpResponse>> script;
  std::vector<std::string> calls;
  HttpResponse get(const std::string& url) override {
    calls.push_back(url);
    auto& queue = script[url];
    if (queue.empty()) return {404, "", ""};
    HttpResponse r = queue.front();
    if (queue.size() > 1) queue.erase(queue.begin());
    return r;
  }
};

TEST(Fetcher, NotFoundIsRetryableErrorWithoutRetries) {
  auto t = std::make_shared<FakeTime>();
  ScriptedClient client;
  HostRateLimiter limiter(1000ms, fake_clock(t));
  Fetcher fetcher(client, limiter, std::nullopt, {}, fake_clock(t));
  try {
    fetcher.get("https://a.org/missing");
    FAIL() << "expected RetryableError";
  } catch (const RetryableError& e) {
    EXPECT_EQ(e.status(), 404);
  }
  EXPECT_EQ(client.calls.size(), 1u);
}

TEST(Fetcher, BacksOffExponentiallyOnServerErrors) {
  auto t = std::make_shared<FakeTime>();
  ScriptedClient client;
  client.script["https://a.org/x"] = {{503, "", ""}, {429, "", ""}, {200, "<p>ok</p>", ""}};
  HostRateLimiter limiter(0ms, fake_clock(t));
  FetchPolicy policy;
  policy.base_backoff = 100ms;
  Fetcher fetcher(client, limiter, std::nullopt, policy, fake_clock(t));
  EXPECT_EQ(fetcher.get("https://a.org/x"), "<p>ok</p>");
  EXPECT_EQ(client.calls.size(), 3u);
  std::vector<std::chrono::steady_clock::duration> backoffs;
  for (auto d : t->sleeps) {
    if (d > 0ms) backoffs.push_back(d);
  }
  ASSERT_EQ(backoffs.size(), 2u);
  EXPECT_EQ(backoffs[0], std::chrono::steady_clock::duration(100ms));
  EXPECT_EQ(backoffs[1], std::chrono::steady_clock::duration(200ms));
}

TEST(Fetcher, GivesUpAfterMaxAttempts) {
  auto t = std::make_shared<FakeTime>();
  ScriptedClient client;
  client.script["https://a.org/x"] = {{500, "", ""}};
  HostRateLimiter limiter(0ms, fake_clock(t));
  FetchPolicy policy;
  policy.max_attempts = 3;
  Fetcher fetcher(client, limiter, std::nullopt, policy, fake_clock(t));
  EXPECT_THROW(fetcher.get("https://a.org/x"), RetryableError);
  EXPECT_EQ(client.calls.size(), 3u);
}

TEST(Fetcher, CacheFirstAndOffline) {
  test::TempDir dir;
  auto t = std::make_shared<FakeTime>();
  ScriptedClient client;
  client.script["https://a.org/x"] = {{200, "page", ""}};
  HostRateLimiter limiter(0ms, fake_clock(t));
  {
    Fetcher fetcher(client, limiter, HtmlCache(dir.path()), {}, fake_clock(t));
    EXPECT_EQ(fetcher.get("https://a.org/x"), "page");
    EXPECT_EQ(fetcher.get("https://a.org/x"), "page");
    EXPECT_EQ(fetcher.network_requests(), 1u);
  }
  FetchPolicy offline;
  offline.offline = true;
  Fetcher cached(client, limiter, HtmlCache(dir.path()), offline, fake_clock(t));
  EXPECT_EQ(cached.get("https://a.org/x"), "page");
  EXPECT_THROW(cached.get("https://a.org/other"), RetryableError);
  EXPECT_EQ(client.calls.size(), 1u);
}

TEST(HtmlCache, ContentAddressedPath) {
  test::TempDir dir;
  HtmlCache cache(dir.path());
  EXPECT_EQ(cache.path_for("https://a.org/x").filename().string(), sha256_hex("https://a.org/x") + ".html");
  EXPECT_FALSE(cache.get("https://a.org/x"));
  cache.put("https://a.org/x", "body");
  EXPECT_EQ(cache.get("https://a.org/x"), "body");
}

TEST(HostRateLimiter, SpacesRequestsPerHost) {
  auto t = std::make_shared<FakeTime>();
  HostRateLimiter limiter(1000ms, fake_clock(t));
  limiter.acquire("a.org");
  limiter.acquire("b.org");
  EXPECT_EQ(t->now, Clock::time_point{});
  limiter.acquire("a.org");
  EXPECT_EQ(t->now, Clock::time_point{} + 1000ms);
  limiter.acquire("a.org");
  EXPECT_EQ(t->now, Clock::time_point{} + 2000ms);
}

TEST(FetchMany, KeepsOrderAndReportsErrors) {
  auto t = std::make_shared<FakeTime>();
  ScriptedClient client;
  std::string page = test::read_text(test::fixture("article_5p.html"));
  client.script["https://a.org/1"] = {{200, page, ""}};
  client.script["https://b.org/3"] = {{200, page, ""}};
  HostRateLimiter limiter(0ms, fake_clock(t));
  Fetcher fetcher(client, limiter, std::nullopt, {}, fake_clock(t));
  auto out = fetch_many(fetcher, {"https://a.org/1", "https://a.org/2", "https://b.org/3"}, {}, 1);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_TRUE(out[0].article && out[0].article->body);
  EXPECT_FALSE(out[1].article);
  EXPECT_NE(out[1].error.find("404"), std::string::npos);
  EXPECT_EQ(out[2].url, "https://b.org/3");
  EXPECT_TRUE(out[2].article);
}

}  // namespace
}  // namespace evver
