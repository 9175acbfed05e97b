#pragma once

#include <array>
#include <cstddef>
#include <span>

#include <nlohmann/json_fwd.hpp>

#include "evver/types.hpp"

namespace evver {

/// Accuracy, per-class precision/recall/F1 and the confusion matrix
/// (rows = truth, columns = prediction). Classes with no predictions or no
/// support get precision/recall 0.
struct ClassificationReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  std::array<double, kNumClasses> f1{};
  double macro_f1 = 0.0;
};

ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted);

void to_json(nlohmann::json& j, const ClassificationReport& r);

/// Index of the largest entry; ties resolve to the lowest index.
template <class Range>
int argmax_lowest(const Range& values) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(std::size(values)); ++k) {
    if (values[static_cast<std::size_t>(k)] > values[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

}  // namespace evver
