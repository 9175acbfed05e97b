#include "evver/fetch.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <curl/curl.h>

#include "evver/error.hpp"
#include "evver/log.hpp"
#include "evver/types.hpp"

namespace evver {
namespace {

std::size_t write_body(char* data, std::size_t size, std::size_t count, void* user) {
  static_cast<std::string*>(user)->append(data, size * count);
  return size * count;
}

struct CurlGlobal {
  CurlGlobal() { curl_global_init(CURL_GLOBAL_DEFAULT); }
  ~CurlGlobal() { curl_global_cleanup(); }
};

bool retryable_status(long status) { return status == 0 || status == 429 || status >= 500; }

std::string host_of(const std::string& url) {
  std::string_view s = url;
  if (auto p = s.find("://"); p != std::string_view::npos) s.remove_prefix(p + 3);
  s = s.substr(0, s.find_first_of("/?#"));
  std::string host(s.substr(0, s.find(':')));
  std::transform(host.begin(), host.end(), host.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return host;
}

}  // namespace

CurlHttpClient::CurlHttpClient(std::chrono::seconds timeout, std::string user_agent)
    : timeout_(timeout), user_agent_(std::move(user_agent)) {
  static CurlGlobal global;
}

HttpResponse CurlHttpClient::get(const std::string& url) {
  HttpResponse response;
  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> handle(curl_easy_init(), curl_easy_cleanup);
  if (!handle) {
    response.error = "curl_easy_init failed";
    return response;
  }
  CURL* h = handle.get();
  curl_easy_setopt(h, CURLOPT_URL, url.c_str());
  curl_easy_setopt(h, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(h, CURLOPT_MAXREDIRS, 10L);
  curl_easy_setopt(h, CURLOPT_TIMEOUT, static_cast<long>(timeout_.count()));
  curl_easy_setopt(h, CURLOPT_USERAGENT, user_agent_.c_str());
  curl_easy_setopt(h, CURLOPT_ACCEPT_ENCODING, "");
  curl_easy_setopt(h, CURLOPT_NOSIGNAL, 1L);
  curl_easy_setopt(h, CURLOPT_WRITEFUNCTION, write_body);
  curl_easy_setopt(h, CURLOPT_WRITEDATA, &response.body);
  CURLcode rc = curl_easy_perform(h);
  if (rc != CURLE_OK) {
    response.status = 0;
    response.error = curl_easy_strerror(rc);
    return response;
  }
  curl_easy_getinfo(h, CURLINFO_RESPONSE_CODE, &response.status);
  return response;
}

Clock Clock::system() {
  return Clock{[] { return std::chrono::steady_clock::now(); },
               [](std::chrono::steady_clock::duration d) { std::this_thread::sleep_for(d); }};
}

HostRateLimiter::HostRateLimiter(std::chrono::milliseconds interval, Clock clock)
    : interval_(interval), clock_(std::move(clock)) {}

void HostRateLimiter::acquire(const std::string& host) {
  Clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    auto now = clock_.now();
    auto it = next_slot_.find(host);
    slot = it == next_slot_.end() ? now : std::max(now, it->second);
    next_slot_[host] = slot + interval_;
  }
  auto now = clock_.now();
  if (slot > now) clock_.sleep_for(slot - now);
}

HtmlCache::HtmlCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path HtmlCache::path_for(const std::string& url) const {
  return dir_ / (sha256_hex(url) + ".html");
}

std::optional<std::string> HtmlCache::get(const std::string& url) const {
  std::ifstream in(path_for(url), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void HtmlCache::put(const std::string& url, const std::string& body) const {
  // write-then-rename so concurrent readers never see a partial file
  auto final_path = path_for(url);
  auto tmp = final_path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write cache file " + tmp.string());
    out << body;
  }
  std::filesystem::rename(tmp, final_path);
}

Fetcher::Fetcher(HttpClient& client, HostRateLimiter& limiter, std::optional<HtmlCache> cache,
                 FetchPolicy policy, Clock clock)
    : client_(client),
      limiter_(limiter),
      cache_(std::move(cache)),
      policy_(policy),
      clock_(std::move(clock)) {}

std::string Fetcher::get(const std::string& url) {
  if (cache_) {
    if (auto hit = cache_->get(url)) return *hit;
  }
  if (policy_.offline) throw RetryableError("offline and not cached: " + url);

  std::string host = host_of(url);
  auto backoff = policy_.base_backoff;
  HttpResponse response;
  for (int attempt = 1;; ++attempt) {
    limiter_.acquire(host);
    ++network_requests_;
    response = client_.get(url);
    if (response.status >= 200 && response.status < 300) {
      if (cache_) cache_->put(url, response.body);
      return std::move(response.body);
    }
    if (!retryable_status(response.status) || attempt >= policy_.max_attempts) break;
    log::debug("fetch retry", {{"url", url}, {"status", response.status}, {"attempt", attempt}});
    clock_.sleep_for(backoff);
    backoff = std::min(backoff * 2, policy_.max_backoff);
  }
  std::string reason = response.status == 0 ? response.error
                                            : "HTTP " + std::to_string(response.status);
  throw RetryableError("fetch failed for " + url + ": " + reason, response.status);
}

ExtractedArticle fetch_article(Fetcher& fetcher, const std::string& url,
                               const std::vector<ExtractionRule>& rules) {
  std::string markup = fetcher.get(url);
  auto result = extract_article(markup, match_rule(rules, url));
  if (result.thin_content) log::warn("thin content", {{"url", url}});
  return result;
}

std::vector<FetchOutcome> fetch_many(Fetcher& fetcher, const std::vector<std::string>& urls,
                                     const std::vector<ExtractionRule>& rules,
                                     std::size_t workers) {
  std::vector<FetchOutcome> out(urls.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < urls.size(); i = next++) {
      out[i].url = urls[i];
      try {
        out[i].article = fetch_article(fetcher, urls[i], rules);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(urls.size(), 1));
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  return out;
}

}  // namespace evver
