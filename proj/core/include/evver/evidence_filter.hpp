#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evver/dcs.hpp"
#include "evver/embeddings.hpp"
#include "evver/evvernet.hpp"
#include "evver/types.hpp"

namespace evver {

struct Prediction {
  std::string item_id;
  std::array<double, kNumClasses> probabilities{};
  ClassLabel label = ClassLabel::fact_checked;  // argmax, ties to the lowest code
  bool dcs_used = false;

  static Prediction from_probabilities(std::string item_id, const std::array<double, kNumClasses>& probabilities,
                                       bool dcs_used = false);
};

void to_json(nlohmann::json& j, const Prediction& p);
void from_json(const nlohmann::json& j, Prediction& p);

/// Outcome for one evidence item: a prediction or the reason there is none.
struct EvidenceResult {
  std::string item_id;
  std::optional<Prediction> prediction;
  std::string error;
};

/// One result per item, in input order. The item's embedding is looked up by
/// id; a missing embedding yields an error entry. When the model uses DCS,
/// `dcs` is required and items without a domain get the absent-rating score.
/// Throws DataError for whole-run mismatches (embedding dimension, missing
/// DCS table).
std::vector<EvidenceResult> classify_evidence(std::span<const EvidenceItem> items, const EvverModel& model,
                                              const EmbeddingSet& embeddings, const DcsTable* dcs = nullptr,
                                              std::size_t workers = 1);

/// Successful predictions, in order.
std::vector<Prediction> successful(std::span<const EvidenceResult> results);

/// Items whose prediction is credible, in their original order. Throws
/// DataError when the two lists differ in length or item ids.
std::vector<EvidenceItem> filter_credible(std::span<const EvidenceItem> items,
                                          std::span<const Prediction> predictions);

struct AuditReport {
  std::string corpus_name;
  std::size_t sample_count = 0;
  std::array<std::size_t, kNumClasses> counts{};
  /// One-decimal shares by largest remainder, so they always total 100.0.
  std::array<double, kNumClasses> percent{};

  double percent_fact_checked() const { return percent[0]; }
  double percent_credible() const { return percent[1]; }
  double percent_unreliable() const { return percent[2]; }
};

/// Shares of each class in tenths of a percent: floor first, then the
/// remaining tenths go to the largest remainders (ties to the lowest code).
std::array<long, kNumClasses> audit_tenths(const std::array<std::size_t, kNumClasses>& counts);

/// Throws DataError when `predictions` is empty.
AuditReport audit(std::string corpus_name, std::span<const Prediction> predictions);

void to_json(nlohmann::json& j, const AuditReport& r);

/// "98.5% / 1.0% / 0.5% / 10,238"
std::string format_audit_row(const AuditReport& r);

/// Aligned plain-text table: Corpus, Fact-checked, Credible, Unreliable,
/// Samples.
std::string format_audit_table(std::span<const AuditReport> reports);

struct CleanReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t dropped_file_name = 0;
  std::size_t dropped_error_page = 0;
  std::size_t dropped_too_short = 0;
};

void to_json(nlohmann::json& j, const CleanReport& r);

inline constexpr std::size_t kMinEvidenceTokens = 3;

/// Drops scraping junk: bare file names (image, media, document or page
/// extensions), short texts carrying HTTP error boilerplate, and texts with
/// fewer than kMinEvidenceTokens tokens.
std::vector<EvidenceItem> clean_evidence(std::span<const EvidenceItem> raw, CleanReport* report = nullptr);

}  // namespace evver
