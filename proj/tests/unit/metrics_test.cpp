#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/metrics.hpp"
#include "evver/rng.hpp"

namespace evver {
namespace {

TEST(ClassificationReport, PerfectPredictions) {
  std::vector<int> y{0, 1, 2, 2, 1, 0};
  auto r = classification_report(y, y);
  EXPECT_EQ(r.accuracy, 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.confusion[i][j], i == j ? 2u : 0u);
    EXPECT_EQ(r.f1[i], 1.0);
  }
  EXPECT_EQ(r.macro_f1, 1.0);
}

TEST(ClassificationReport, HandComputedScores) {
  std::vector<int> truth{0, 0, 1, 1, 2, 2};
  std::vector<int> pred{0, 1, 1, 1, 0, 2};
  auto r = classification_report(truth, pred);
  EXPECT_DOUBLE_EQ(r.accuracy, 4.0 / 6.0);
  EXPECT_EQ(r.confusion[0][1], 1u);
  EXPECT_EQ(r.confusion[2][0], 1u);
  EXPECT_DOUBLE_EQ(r.precision[0], 0.5);
  EXPECT_DOUBLE_EQ(r.recall[0], 0.5);
  EXPECT_DOUBLE_EQ(r.precision[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall[1], 1.0);
  EXPECT_DOUBLE_EQ(r.f1[1], 0.8);
  EXPECT_DOUBLE_EQ(r.precision[2], 1.0);
  EXPECT_DOUBLE_EQ(r.recall[2], 0.5);
  nlohmann::json j = r;
  EXPECT_EQ(j["confusion"][0][1], 1);
}

TEST(ClassificationReport, NoPredictionsForAClassGivesZero) {
  std::vector<int> truth{0, 1, 2}, pred{0, 0, 0};
  auto r = classification_report(truth, pred);
  EXPECT_EQ(r.precision[1], 0.0);
  EXPECT_EQ(r.recall[1], 0.0);
  EXPECT_EQ(r.f1[1], 0.0);
}

TEST(ClassificationReport, UniformRandomIsChance) {
  Rng rng(11);
  std::vector<int> truth(10000), pred(10000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<int>(i % 3);
    pred[i] = static_cast<int>(rng.uniform_index(3));
  }
  EXPECT_NEAR(classification_report(truth, pred).accuracy, 1.0 / 3.0, 0.05);
}

TEST(ClassificationReport, LengthMismatch) {
  std::vector<int> a{0, 1}, b{0};
  EXPECT_THROW(classification_report(a, b), DataError);
}

TEST(ArgmaxLowest, TiesGoLow) {
  EXPECT_EQ(argmax_lowest(std::array<double, 3>{0.2, 0.4, 0.4}), 1);
  EXPECT_EQ(argmax_lowest(std::array<double, 3>{1.0 / 3, 1.0 / 3, 1.0 / 3}), 0);
  EXPECT_EQ(argmax_lowest(std::array<double, 3>{0.1, 0.8, 0.1}), 1);
}

}  // namespace
}  // namespace evver
