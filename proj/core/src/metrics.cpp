#include "evver/metrics.hpp"

#include <nlohmann/json.hpp>

#include "evver/error.hpp"

namespace evver {

ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw DataError("classification_report: " + std::to_string(truth.size()) + " labels vs " +
                    std::to_string(predicted.size()) + " predictions");
  }
  ClassificationReport r;
  r.n = truth.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto t = static_cast<std::size_t>(label_code(label_from_code(truth[i])));
    auto p = static_cast<std::size_t>(label_code(label_from_code(predicted[i])));
    ++r.confusion[t][p];
    if (t == p) ++correct;
  }
  r.accuracy = r.n ? static_cast<double>(correct) / static_cast<double>(r.n) : 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t tp = r.confusion[c][c];
    std::size_t pred_c = 0, true_c = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      pred_c += r.confusion[k][c];
      true_c += r.confusion[c][k];
    }
    r.precision[c] = pred_c ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
    r.recall[c] = true_c ? static_cast<double>(tp) / static_cast<double>(true_c) : 0.0;
    double denom = r.precision[c] + r.recall[c];
    r.f1[c] = denom > 0 ? 2 * r.precision[c] * r.recall[c] / denom : 0.0;
    r.macro_f1 += r.f1[c] / kNumClasses;
  }
  return r;
}

void to_json(nlohmann::json& j, const ClassificationReport& r) {
  j = nlohmann::json::object();
  j["n"] = r.n;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["confusion"] = r.confusion;
  auto& per = j["per_class"] = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    per[std::string(label_name(static_cast<ClassLabel>(c)))] = {
        {"precision", r.precision[c]}, {"recall", r.recall[c]}, {"f1", r.f1[c]}};
  }
}

}  // namespace evver
