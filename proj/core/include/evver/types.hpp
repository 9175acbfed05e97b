#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace evver {

/// Three-way article/evidence class. Code 1 (credible) is the only label that
/// passes the evidence filter.
enum class ClassLabel : std::uint8_t {
  fact_checked = 0,
  credible = 1,
  unreliable = 2,
};

inline constexpr int kNumClasses = 3;
inline constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::fact_checked, ClassLabel::credible, ClassLabel::unreliable};

ClassLabel label_from_code(int code);
ClassLabel label_from_name(std::string_view name);
std::string_view label_name(ClassLabel label) noexcept;
constexpr int label_code(ClassLabel label) noexcept { return static_cast<int>(label); }

enum class SourceDataset : std::uint8_t { multifc, pubhealth, politifact, fnc, nelagt, grafn };

SourceDataset source_from_name(std::string_view name);
std::string_view source_name(SourceDataset source) noexcept;

/// Calendar date. Inputs without day (or month) precision are normalized to
/// the first of the month (or January).
struct Date {
  int year = 0;
  int month = 1;
  int day = 1;

  /// Accepts ISO forms (`2020-01-15`, `2020-01-15T08:00:00Z`, `2020-01`,
  /// `2020`), US forms (`01/15/2020`) and English month names
  /// (`January 15, 2020`, `15 Jan 2020`, `Jan 2020`).
  static std::optional<Date> parse(std::string_view text);
  std::string to_string() const;  // YYYY-MM-DD

  auto operator<=>(const Date&) const = default;
};

struct Article {
  std::string id;
  std::string title;
  std::optional<std::string> body;
  Date date;
  std::string url;
  std::string domain;
  std::string topic;
  ClassLabel label = ClassLabel::fact_checked;
  SourceDataset source_dataset = SourceDataset::multifc;

  bool operator==(const Article&) const = default;
};

enum class EvidenceKind : std::uint8_t { short_text, long_text };

struct EvidenceItem {
  std::string id;
  std::string text;
  std::optional<std::string> domain;
  EvidenceKind kind = EvidenceKind::short_text;

  bool operator==(const EvidenceItem&) const = default;
};

enum class SplitName : std::uint8_t { train, validation, test };
std::string_view split_name(SplitName split) noexcept;

struct DatasetSplit {
  SplitName split = SplitName::train;
  std::vector<std::string> article_ids;

  bool operator==(const DatasetSplit&) const = default;
};

struct SplitSet {
  DatasetSplit train{SplitName::train, {}};
  DatasetSplit validation{SplitName::validation, {}};
  DatasetSplit test{SplitName::test, {}};

  bool operator==(const SplitSet&) const = default;
};

/// Lowercase, punctuation stripped, whitespace collapsed. The dedup key.
std::string normalize_title_key(std::string_view title);

/// Content hash of (normalized title, source dataset); 16 hex chars.
std::string make_article_id(std::string_view title, SourceDataset source);

/// Host of `url_or_host`, lowercased, without scheme, port, path or a leading
/// `www.`, reduced to its registrable part (eTLD+1 for a built-in list of
/// common two-level public suffixes). Empty when no host can be found.
std::string registrable_domain(std::string_view url_or_host);

/// The label part of a registrable domain ("politifact" for
/// "politifact.com"), used to strip brand tokens from titles.
std::string domain_brand(std::string_view registrable);

std::string sha256_hex(std::string_view bytes);

/// 10238 -> "10,238".
std::string with_thousands(std::size_t n);

void to_json(nlohmann::json& j, const ClassLabel& label);
void from_json(const nlohmann::json& j, ClassLabel& label);
void to_json(nlohmann::json& j, const Date& date);
void from_json(const nlohmann::json& j, Date& date);
void to_json(nlohmann::json& j, const Article& article);
void from_json(const nlohmann::json& j, Article& article);
void to_json(nlohmann::json& j, const EvidenceItem& item);
void from_json(const nlohmann::json& j, EvidenceItem& item);
void to_json(nlohmann::json& j, const SplitSet& splits);
void from_json(const nlohmann::json& j, SplitSet& splits);

/// JSON-Lines corpus I/O. Malformed lines are reported as DataError with the
/// line number.
std::vector<Article> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<Article>& articles);
std::vector<EvidenceItem> read_evidence(const std::string& path);
void write_evidence(const std::string& path, const std::vector<EvidenceItem>& items);

}  // namespace evver
