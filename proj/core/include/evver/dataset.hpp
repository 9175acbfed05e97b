#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evver/types.hpp"

namespace evver {

inline constexpr int kFirstYear = 2016;
inline constexpr int kLastYear = 2022;
inline constexpr std::string_view kFallbackTopic = "other";

/// Editorial mapping from raw topic-classifier categories to topic groups.
struct TopicMap {
  std::map<std::string, std::string> raw_to_group;

  std::set<std::string> groups() const;

  /// JSON object {"raw": "group", ...} or {"raw_to_group": {...}}. Keys are
  /// lowercased.
  static TopicMap load(const std::string& path);
  static TopicMap from_json(const nlohmann::json& j);
};

/// Group for `raw_topic` (lowercased, trimmed). Unknown or empty topics map
/// to "other" and bump `unknown_counter` when given.
std::string consolidate_topic(std::string_view raw_topic, const TopicMap& map,
                              std::size_t* unknown_counter = nullptr);

/// First occurrence per normalize_title_key wins; empty keys are dropped.
std::vector<Article> dedup(std::vector<Article> articles);

std::vector<Article> filter_years(std::vector<Article> articles, int lo = kFirstYear,
                                  int hi = kLastYear);

struct CellKey {
  int year = 0;
  std::string topic;
  ClassLabel label = ClassLabel::fact_checked;

  auto operator<=>(const CellKey&) const = default;
};

/// Per-(year, topic, label) target counts. Fact-checked targets equal the
/// fact-checked supply; credible/unreliable targets are the fact-checked
/// count clipped to the available supply.
struct BalancePlan {
  std::map<CellKey, std::size_t> target_counts;
  ClassLabel reference_label = ClassLabel::fact_checked;

  static BalancePlan derive(const std::vector<Article>& articles);
};

struct Shortfall {
  int year = 0;
  std::string topic;
  ClassLabel label = ClassLabel::credible;
  std::size_t requested = 0;
  std::size_t available = 0;
  std::size_t missing() const { return requested - available; }

  bool operator==(const Shortfall&) const = default;
};

struct BalanceResult {
  std::vector<Article> corpus;  // ordered by (year, topic, label, id)
  std::vector<Shortfall> shortfalls;
};

/// Draws credible and unreliable articles without replacement in every
/// (year, topic) cell to match the fact-checked count. Credible draws
/// exhaust Fake News Corpus candidates before NELA-GT, then any other
/// source; unreliable draws pool all sources. Cells with no fact-checked
/// articles contribute nothing. Shortfalls fill to supply and are recorded.
BalanceResult balance(const std::vector<Article>& articles, const BalancePlan& plan,
                      std::uint64_t seed, std::size_t workers = 1);

/// Stratified by label: per class, ids sorted then shuffled under `seed`;
/// train = floor(0.8 n), validation = floor(0.1 n), test = the rest.
SplitSet split(const std::vector<Article>& corpus, std::uint64_t seed = 42);

struct ClassStats {
  std::size_t total = 0;
  std::size_t with_body = 0;
  double title_tokens_mean = 0.0;
  double title_tokens_stddev = 0.0;
};

struct CorpusReport {
  std::size_t total = 0;
  std::map<ClassLabel, ClassStats> per_class;
  std::map<int, std::map<ClassLabel, std::size_t>> per_year;
  std::map<std::string, std::map<ClassLabel, std::size_t>> per_topic;
  std::map<SourceDataset, std::pair<std::size_t, std::size_t>> per_source;  // (entries, with body)
  double full_text_percent = 0.0;
  /// Largest gap between any two classes' empirical CDFs of title token
  /// length; balanced when <= kTitleLengthGapLimit.
  double title_length_max_gap = 0.0;
  bool title_length_balanced = true;
};

inline constexpr double kTitleLengthGapLimit = 0.05;

CorpusReport corpus_stats(const std::vector<Article>& corpus);

void to_json(nlohmann::json& j, const CorpusReport& r);
std::string format_report(const CorpusReport& r);

void to_json(nlohmann::json& j, const Shortfall& s);

}  // namespace evver
