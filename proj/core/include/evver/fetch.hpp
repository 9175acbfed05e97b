#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "evver/html.hpp"

namespace evver {

struct HttpResponse {
  long status = 0;  // 0 = transport failure
  std::string body;
  std::string error;
};

class HttpClient {
 public:
  virtual ~HttpClient() = default;
  virtual HttpResponse get(const std::string& url) = 0;
};

/// libcurl-backed client. Follows redirects; one easy handle per call so a
/// single instance is safe to share across fetch workers.
class CurlHttpClient final : public HttpClient {
 public:
  explicit CurlHttpClient(std::chrono::seconds timeout = std::chrono::seconds(30),
                          std::string user_agent = "evver/0.1 (+research crawler)");
  HttpResponse get(const std::string& url) override;

 private:
  std::chrono::seconds timeout_;
  std::string user_agent_;
};

/// Time source used by rate limiting and backoff; replaceable in tests.
struct Clock {
  using time_point = std::chrono::steady_clock::time_point;
  std::function<time_point()> now;
  std::function<void(std::chrono::steady_clock::duration)> sleep_for;

  static Clock system();
};

/// Grants at most one request per `interval` for each host, across all
/// threads sharing the limiter.
class HostRateLimiter {
 public:
  explicit HostRateLimiter(std::chrono::milliseconds interval = std::chrono::seconds(1),
                           Clock clock = Clock::system());

  /// Blocks until `host` may be contacted again.
  void acquire(const std::string& host);

 private:
  std::chrono::milliseconds interval_;
  Clock clock_;
  std::mutex mutex_;
  std::map<std::string, Clock::time_point> next_slot_;
};

/// Raw HTML persisted as `<dir>/<sha256(url)>.html`.
class HtmlCache {
 public:
  explicit HtmlCache(std::filesystem::path dir);

  std::filesystem::path path_for(const std::string& url) const;
  std::optional<std::string> get(const std::string& url) const;
  void put(const std::string& url, const std::string& body) const;

 private:
  std::filesystem::path dir_;
};

struct FetchPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_backoff{1000};
  std::chrono::milliseconds max_backoff{60000};
  bool offline = false;  // cache only; misses fail without touching the network
};

/// Cache-first page fetcher with per-host politeness and exponential backoff
/// on 429/5xx and transport errors. Other non-2xx statuses fail immediately
/// with RetryableError.
class Fetcher {
 public:
  Fetcher(HttpClient& client, HostRateLimiter& limiter, std::optional<HtmlCache> cache,
          FetchPolicy policy = {}, Clock clock = Clock::system());

  std::string get(const std::string& url);

  std::size_t network_requests() const { return network_requests_; }

 private:
  HttpClient& client_;
  HostRateLimiter& limiter_;
  std::optional<HtmlCache> cache_;
  FetchPolicy policy_;
  Clock clock_;
  std::atomic<std::size_t> network_requests_{0};
};

/// Title/body for one URL. HTTP failures propagate as RetryableError; thin
/// content is reported in the result, not thrown.
ExtractedArticle fetch_article(Fetcher& fetcher, const std::string& url,
                               const std::vector<ExtractionRule>& rules);

struct FetchOutcome {
  std::string url;
  std::optional<ExtractedArticle> article;
  std::string error;  // set when article is empty
};

/// Fetches `urls` on a pool of `workers` threads; results keep input order.
std::vector<FetchOutcome> fetch_many(Fetcher& fetcher, const std::vector<std::string>& urls,
                                     const std::vector<ExtractionRule>& rules,
                                     std::size_t workers);

}  // namespace evver
