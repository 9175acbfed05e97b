#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evver/fetch.hpp"
#include "evver/types.hpp"

namespace evver {

/// Either a fixed label for every row, or a lookup on one column's
/// (lowercased, trimmed) value. Rows whose value is not in `values` are
/// skipped with reason "unmapped_label".
struct LabelAssignment {
  std::optional<ClassLabel> fixed;
  std::string column;
  std::map<std::string, ClassLabel> values;
};

/// Keep only rows whose `column` value (lowercased) is one of `allowed`.
struct RowFilter {
  std::string column;
  std::vector<std::string> allowed;
};

enum class InputFormat { automatic, csv, jsonl };

struct SourceAdapterConfig {
  SourceDataset source_dataset = SourceDataset::multifc;
  std::string input_path;
  /// source column -> Article field (title, body, date, url, domain, topic)
  std::map<std::string, std::string> field_mapping;
  LabelAssignment label_assignment;
  std::vector<RowFilter> filters;
  InputFormat format = InputFormat::automatic;
  char delimiter = ',';
  bool title_from_url = false;  // always derive the title from the URL slug
  bool date_from_url = false;   // prefer a /YYYY/MM[/DD]/ date embedded in the URL

  /// Throws DomainError unless the mapping covers (title or url), date and url.
  void validate() const;
};

/// Built-in column layouts for the public releases of the six upstream sets.
SourceAdapterConfig default_adapter(SourceDataset source, std::string input_path);

/// Overrides on top of `default_adapter`; any key may be omitted.
SourceAdapterConfig adapter_from_json(const nlohmann::json& j, SourceAdapterConfig base);

struct SkipRecord {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string reason;

  bool operator==(const SkipRecord&) const = default;
};

void to_json(nlohmann::json& j, const SkipRecord& r);

struct IngestStats {
  std::size_t rows = 0;
  std::size_t emitted = 0;
  std::map<std::string, std::size_t> skipped_by_reason;
};

/// Streams rows of `config.input_path` into Articles. Rows that fail a
/// mandatory field are passed to `on_skip` and do not stop the run; an
/// unreadable file throws DataError.
IngestStats ingest_source(const SourceAdapterConfig& config,
                          const std::function<void(Article&&)>& on_article,
                          const std::function<void(const SkipRecord&)>& on_skip = {});

struct IngestResult {
  std::vector<Article> articles;
  std::vector<SkipRecord> skipped;
  IngestStats stats;
};

IngestResult ingest_source(const SourceAdapterConfig& config);

/// Title derived from the last meaningful URL path segment. Throws
/// DomainError when no segment survives.
std::string title_from_url(std::string_view url);

/// Removes "politifact" and the article's registrable domain as substrings,
/// and the domain's brand label as a whole word, case-insensitively; then
/// collapses whitespace and trims dangling separators.
std::string strip_brand_tokens(std::string_view title, std::string_view domain);

/// /YYYY/MM/DD/, /YYYY/MM/ or /YYYY/mon/DD/ segments in a URL path.
std::optional<Date> date_from_url(std::string_view url);

struct EnrichStats {
  std::size_t attempted = 0;
  std::size_t filled = 0;
  std::size_t thin = 0;
  std::size_t failed = 0;
};

/// Fetches bodies for articles that lack one and have a URL.
EnrichStats fill_missing_bodies(std::vector<Article>& articles, Fetcher& fetcher,
                                const std::vector<ExtractionRule>& rules, std::size_t workers);

}  // namespace evver
