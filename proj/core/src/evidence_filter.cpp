#include "evver/evidence_filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/metrics.hpp"
#include "evver/parallel.hpp"
#include "evver/text_features.hpp"

namespace evver {

Prediction Prediction::from_probabilities(std::string item_id, const std::array<double, kNumClasses>& probabilities,
                                          bool dcs_used) {
  return {std::move(item_id), probabilities, label_from_code(argmax_lowest(probabilities)), dcs_used};
}

void to_json(nlohmann::json& j, const Prediction& p) {
  j = nlohmann::json{{"id", p.item_id},
                     {"probabilities", p.probabilities},
                     {"label", label_name(p.label)},
                     {"dcs_used", p.dcs_used}};
}

void from_json(const nlohmann::json& j, Prediction& p) {
  p.item_id = j.at("id").get<std::string>();
  p.probabilities = j.at("probabilities").get<std::array<double, kNumClasses>>();
  const auto& l = j.at("label");
  p.label = l.is_number_integer() ? label_from_code(l.get<int>()) : label_from_name(l.get<std::string>());
  p.dcs_used = j.value("dcs_used", false);
}

std::vector<EvidenceResult> classify_evidence(std::span<const EvidenceItem> items, const EvverModel& model,
                                              const EmbeddingSet& embeddings, const DcsTable* dcs,
                                              std::size_t workers) {
  const auto& cfg = model.config;
  if (!items.empty() && embeddings.dim() != cfg.input_dim) {
    throw DataError("dimension mismatch: embeddings have dim " + std::to_string(embeddings.dim()) +
                    ", model expects " + std::to_string(cfg.input_dim));
  }
  if (cfg.use_dcs && !dcs) throw DataError("model was trained with DCS input; a DCS table is required");

  std::vector<EvidenceResult> out(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const auto& item = items[i];
    auto& r = out[i];
    r.item_id = item.id;
    try {
      auto row = embeddings.row_of(item.id);
      if (!row) {
        r.error = "no embedding for id " + item.id;
        return;
      }
      std::optional<double> s;
      if (cfg.use_dcs) {
        s = item.domain ? dcs->score(registrable_domain(*item.domain)) : normalize_dcs(kDcsAbsent);
      }
      const float* begin = embeddings.vectors.row(static_cast<Eigen::Index>(*row)).data();
      auto probs = model.forward(std::span<const float>(begin, embeddings.dim()), s);
      r.prediction = Prediction::from_probabilities(item.id, probs, cfg.use_dcs);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  return out;
}

std::vector<Prediction> successful(std::span<const EvidenceResult> results) {
  std::vector<Prediction> out;
  for (const auto& r : results) {
    if (r.prediction) out.push_back(*r.prediction);
  }
  return out;
}

std::vector<EvidenceItem> filter_credible(std::span<const EvidenceItem> items,
                                          std::span<const Prediction> predictions) {
  if (items.size() != predictions.size()) {
    throw DataError("filter: " + std::to_string(items.size()) + " items but " + std::to_string(predictions.size()) +
                    " predictions");
  }
  std::vector<EvidenceItem> kept;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].id != predictions[i].item_id) {
      throw DataError("filter: item " + std::to_string(i) + " is '" + items[i].id + "' but its prediction is for '" +
                      predictions[i].item_id + "'");
    }
    if (predictions[i].label == ClassLabel::credible) kept.push_back(items[i]);
  }
  return kept;
}

std::array<long, kNumClasses> audit_tenths(const std::array<std::size_t, kNumClasses>& counts) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  std::array<long, kNumClasses> tenths{};
  if (n == 0) return tenths;
  // exact integer arithmetic: share in tenths = 1000 * c / n
  std::array<std::size_t, kNumClasses> remainder{};
  long assigned = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    tenths[k] = static_cast<long>(1000 * counts[k] / n);
    remainder[k] = 1000 * counts[k] % n;
    assigned += tenths[k];
  }
  std::array<std::size_t, kNumClasses> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < 1000; ++k, ++assigned) ++tenths[order[k]];
  return tenths;
}

AuditReport audit(std::string corpus_name, std::span<const Prediction> predictions) {
  if (predictions.empty()) throw DataError("audit of '" + corpus_name + "': no predictions");
  AuditReport r;
  r.corpus_name = std::move(corpus_name);
  r.sample_count = predictions.size();
  for (const auto& p : predictions) ++r.counts[static_cast<std::size_t>(label_code(p.label))];
  auto tenths = audit_tenths(r.counts);
  for (std::size_t k = 0; k < kNumClasses; ++k) r.percent[k] = static_cast<double>(tenths[k]) / 10.0;
  return r;
}

void to_json(nlohmann::json& j, const AuditReport& r) {
  j = nlohmann::json{{"corpus_name", r.corpus_name},
                     {"sample_count", r.sample_count},
                     {"counts",
                      {{"fact_checked", r.counts[0]}, {"credible", r.counts[1]}, {"unreliable", r.counts[2]}}},
                     {"percent_fact_checked", r.percent[0]},
                     {"percent_credible", r.percent[1]},
                     {"percent_unreliable", r.percent[2]}};
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v);
  return buf;
}

}  // namespace

std::string format_audit_row(const AuditReport& r) {
  return pct(r.percent[0]) + " / " + pct(r.percent[1]) + " / " + pct(r.percent[2]) + " / " +
         with_thousands(r.sample_count);
}

std::string format_audit_table(std::span<const AuditReport> reports) {
  std::vector<std::array<std::string, 5>> rows{{"Corpus", "Fact-checked", "Credible", "Unreliable", "Samples"}};
  for (const auto& r : reports) {
    rows.push_back({r.corpus_name, pct(r.percent[0]), pct(r.percent[1]), pct(r.percent[2]),
                    with_thousands(r.sample_count)});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < 5; ++c) {
      const auto& cell = rows[i][c];
      std::string pad(width[c] - cell.size(), ' ');
      if (c) out += "  ";
      out += c == 0 ? cell + pad : pad + cell;  // name left-aligned, numbers right-aligned
    }
    out += '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 8, '-') + '\n';
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const CleanReport& r) {
  j = nlohmann::json{{"input", r.input},
                     {"kept", r.kept},
                     {"dropped_file_name", r.dropped_file_name},
                     {"dropped_error_page", r.dropped_error_page},
                     {"dropped_too_short", r.dropped_too_short}};
}

namespace {

constexpr std::size_t kErrorPageMaxTokens = 20;

const std::regex& file_name_pattern() {
  static const std::regex re(
      R"(^\s*[^\s/\\]*[\w\-]\.(jpe?g|png|gif|webp|bmp|svg|tiff?|ico|heic|pdf|docx?|xlsx?|pptx?|mp[34]|webm|mov|avi|wav|html?|php|aspx?)\s*$)",
      std::regex::icase | std::regex::ECMAScript);
  return re;
}

const std::vector<std::string>& error_phrases() {
  static const std::vector<std::string> phrases{
      "page not found",       "404 not found",           "error 404",          "403 forbidden",
      "internal server error",   "bad gateway",        "service unavailable",
      "gateway timeout",      "this page could not be found", "the requested url was not found",
      "page you requested could not be found", "enable javascript and cookies to continue"};
  return phrases;
}

std::string lower_collapsed(std::string_view s) {
  std::string out;
  bool space = false;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

}  // namespace

std::vector<EvidenceItem> clean_evidence(std::span<const EvidenceItem> raw, CleanReport* report) {
  CleanReport r;
  r.input = raw.size();
  std::vector<EvidenceItem> kept;
  for (const auto& item : raw) {
    if (std::regex_match(item.text, file_name_pattern())) {
      ++r.dropped_file_name;
      continue;
    }
    auto tokens = tokenize(item.text);
    if (tokens.size() <= kErrorPageMaxTokens) {
      auto text = lower_collapsed(item.text);
      bool error_page = std::any_of(error_phrases().begin(), error_phrases().end(),
                                    [&](const std::string& p) { return text.find(p) != std::string::npos; });
      if (error_page) {
        ++r.dropped_error_page;
        continue;
      }
    }
    if (tokens.size() < kMinEvidenceTokens) {
      ++r.dropped_too_short;
      continue;
    }
    kept.push_back(item);
  }
  r.kept = kept.size();
  if (report) *report = r;
  return kept;
}

}  // namespace evver
