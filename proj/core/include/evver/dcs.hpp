#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evver/fetch.hpp"

struct sqlite3;

namespace evver {

inline constexpr int kDcsMin = -3;
inline constexpr int kDcsMax = 4;
inline constexpr int kDcsAbsent = 0;

/// Integer DCS for an MBFC factual-reporting category, consulting the
/// credibility rating only for "mixed". Inputs are matched case-insensitively
/// after trimming; empty or absent means "no rating".
///
///   satire -3, very low -2, low -1, mostly factual 2, high 3, very high 4
///   mixed: medium credibility 1, high credibility 2, low credibility -1,
///          no credibility rating 0
///   no factual rating: 0
///
/// Throws DomainError naming any unrecognized category string.
int encode_dcs(std::optional<std::string_view> factual_reporting,
               std::optional<std::string_view> credibility_rating);

/// (encoded + 3) / 7, mapping [-3, 4] onto [0, 1]. Throws DomainError
/// outside that range.
double normalize_dcs(int encoded);

struct DcsRecord {
  std::string domain;
  std::optional<std::string> bias_rating;
  std::optional<std::string> factual_reporting;
  std::optional<std::string> credibility_rating;
  int encoded = kDcsAbsent;
  double normalized = 3.0 / 7.0;
  bool parse_failure = false;
  std::int64_t fetched_at = 0;  // unix seconds

  /// Record with encoded/normalized derived from the ratings.
  static DcsRecord from_ratings(std::string domain, std::optional<std::string> bias,
                                std::optional<std::string> factual,
                                std::optional<std::string> credibility);
  /// All ratings absent; encoded 0.
  static DcsRecord absent(std::string domain);

  bool operator==(const DcsRecord&) const = default;
};

void to_json(nlohmann::json& j, const DcsRecord& r);
void from_json(const nlohmann::json& j, DcsRecord& r);

struct MbfcPage {
  bool found = false;          // any rating label present on the page
  bool parse_failure = false;  // a label was present but its value was not understood
  std::optional<std::string> bias_rating;
  std::optional<std::string> factual_reporting;
  std::optional<std::string> credibility_rating;
};

/// Reads "Bias Rating:", "Factual Reporting:" and "MBFC Credibility Rating:"
/// from an MBFC source page.
MbfcPage parse_mbfc_page(std::string_view markup);

/// Persistent domain -> DcsRecord store (a single SQLite file). Reads take a
/// shared lock, writes an exclusive one.
class DcsCache {
 public:
  explicit DcsCache(const std::string& path);
  ~DcsCache();
  DcsCache(const DcsCache&) = delete;
  DcsCache& operator=(const DcsCache&) = delete;

  std::optional<DcsRecord> get(const std::string& domain) const;
  void put(const DcsRecord& record);
  std::vector<DcsRecord> all() const;

  /// Snapshot as JSON-Lines of DcsRecord, sorted by domain.
  void export_snapshot(const std::string& path) const;
  std::size_t import_snapshot(const std::string& path);

 private:
  sqlite3* db_ = nullptr;
  mutable std::shared_mutex mutex_;
};

std::vector<DcsRecord> read_dcs_snapshot(const std::string& path);
void write_dcs_snapshot(const std::string& path, std::vector<DcsRecord> records);

/// Read-only domain -> normalized score map used at training and inference.
/// Domains not present resolve to the absent record.
class DcsTable {
 public:
  DcsTable() = default;
  explicit DcsTable(std::vector<DcsRecord> records);

  /// Loads either a SQLite cache file or a JSON-Lines snapshot.
  static DcsTable load(const std::string& path);

  DcsRecord lookup(std::string_view domain) const;
  double score(std::string_view domain) const { return lookup(domain).normalized; }
  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::string, DcsRecord, std::less<>> records_;
};

struct DcsLookupOptions {
  /// `{slug}` is replaced by the domain's brand label, `{domain}` by the
  /// registrable domain.
  std::string url_template = "https://mediabiasfactcheck.com/{slug}/";
  std::chrono::seconds ttl = std::chrono::hours(24 * 90);
  std::function<std::int64_t()> now = [] {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
};

/// Cache-first MBFC lookup. A fresh cached record is returned without any
/// request. On a miss the page is fetched (the fetcher enforces per-host
/// rate limits), parsed, encoded and stored. Pages that do not exist
/// (404/410) yield and store the absent record. Transport failures throw
/// RetryableError; with no fetcher a miss returns a stale entry if one
/// exists, else throws RetryableError.
class DcsLookup {
 public:
  DcsLookup(DcsCache& cache, Fetcher* fetcher, DcsLookupOptions options = {});

  DcsRecord lookup(const std::string& domain);

 private:
  DcsCache& cache_;
  Fetcher* fetcher_;
  DcsLookupOptions options_;
};

}  // namespace evver
