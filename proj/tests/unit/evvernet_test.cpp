#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/evvernet.hpp"

namespace evver {
namespace {

EvverConfig small_config(std::size_t d, bool use_dcs, std::vector<std::size_t> hidden = {4}) {
  EvverConfig c;
  c.input_dim = d;
  c.hidden_dims = std::move(hidden);
  c.use_dcs = use_dcs;
  return c;
}

TEST(EvverConfig, ValidateAndCounts) {
  auto c = small_config(8, true, {4, 5});
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.model_input_dim(), 9u);
  EXPECT_EQ(c.parameter_count(), (9 * 4 + 4) + (4 * 5 + 5) + (5 * 3 + 3));
  auto bad = c;
  bad.input_dim = 0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = c;
  bad.hidden_dims = {};
  EXPECT_THROW(bad.validate(), DomainError);
  bad = c;
  bad.dropout = 1.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = c;
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);
  EXPECT_NO_THROW(bad.validate(true));
  bad = c;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(EvverConfig, JsonRoundTripAndPartialRead) {
  auto c = small_config(8, true, {16, 16});
  c.precision = Precision::f64;
  c.l2 = 1e-3;
  nlohmann::json j = c;
  auto back = j.get<EvverConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  auto partial = nlohmann::json::parse(R"({"hidden_dims":[32],"learning_rate":0.01})").get<EvverConfig>();
  EXPECT_EQ(partial.hidden_dims, std::vector<std::size_t>{32});
  EXPECT_EQ(partial.learning_rate, 0.01);
  EXPECT_EQ(partial.batch_size, 512u);
}

TEST(EvverModel, ZeroModelIsUniform) {
  auto m = EvverModel::zeros(small_config(5, true));
  std::vector<float> x{1, -2, 3, 0.5f, 9};
  auto p = m.forward(std::span<const float>(x), 0.3);
  for (double v : p) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(EvverModel, HandBuiltOneHiddenUnit) {
  auto m = EvverModel::zeros(small_config(1, false, {1}));
  const double w = 0.7, b = -0.2, x = 1.3;
  const double u[3] = {0.5, -1.1, 2.0}, c[3] = {0.1, 0.0, -0.3};
  m.params.layers[0].weight(0, 0) = w;
  m.params.layers[0].bias(0) = b;
  for (int k = 0; k < 3; ++k) {
    m.params.layers[1].weight(k, 0) = u[k];
    m.params.layers[1].bias(k) = c[k];
  }
  double z = w * x + b;
  double h = 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
  double logits[3], total = 0;
  for (int k = 0; k < 3; ++k) total += std::exp(logits[k] = u[k] * h + c[k]);
  std::vector<double> in{x};
  auto p = m.forward(std::span<const double>(in));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p[static_cast<std::size_t>(k)], std::exp(logits[k]) / total, 1e-9);
}

TEST(EvverModel, DcsIsTheLastInputColumn) {
  auto m = EvverModel::zeros(small_config(2, true, {1}));
  m.params.layers[0].weight(0, 2) = 3.0;  // only the DCS column feeds the hidden unit
  m.params.layers[1].weight(1, 0) = 1.0;
  std::vector<double> x{100.0, -100.0};
  auto lo = m.forward(std::span<const double>(x), 0.0);
  auto hi = m.forward(std::span<const double>(x), 1.0);
  EXPECT_DOUBLE_EQ(lo[1], 1.0 / 3.0);
  EXPECT_GT(hi[1], lo[1]);
}

TEST(EvverModel, SoftmaxSumsToOneAndInferenceIsDeterministic) {
  auto m = EvverModel::initialize(small_config(6, true, {8, 8}));
  std::vector<float> x{0.1f, 2, -3, 4, 0.5f, -0.25f};
  auto a = m.forward(std::span<const float>(x), 0.5);
  auto b = m.forward(std::span<const float>(x), 0.5);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a[0] + a[1] + a[2], 1.0, 1e-12);
}

TEST(EvverModel, DimensionAndDcsMismatches) {
  auto with = EvverModel::initialize(small_config(3, true));
  auto without = EvverModel::initialize(small_config(3, false));
  std::vector<float> x{1, 2, 3}, short_x{1, 2};
  EXPECT_THROW(with.forward(std::span<const float>(short_x), 0.5), DataError);
  EXPECT_THROW(with.forward(std::span<const float>(x)), DataError);
  EXPECT_THROW(without.forward(std::span<const float>(x), 0.5), DataError);
  EXPECT_THROW(with.forward(std::span<const float>(x), 1.5), DomainError);
  EXPECT_NO_THROW(without.forward(std::span<const float>(x)));
}

TEST(EvverModel, InitializationIsSeededHeNormal) {
  auto c = small_config(400, false, {300});
  auto a = EvverModel::initialize(c);
  auto b = EvverModel::initialize(c);
  EXPECT_EQ(a.params.layers[0].weight, b.params.layers[0].weight);
  const auto& w = a.params.layers[0].weight;
  double mean = w.mean();
  double var = (w.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(var, 2.0 / 400.0, 0.05 * 2.0 / 400.0);
  EXPECT_TRUE(a.params.layers[0].bias.isZero());
  c.seed = 7;
  EXPECT_NE(EvverModel::initialize(c).params.layers[0].weight, w);
}

TEST(EvverModel, CheckShapes) {
  auto m = EvverModel::initialize(small_config(3, true, {4, 2}));
  EXPECT_NO_THROW(m.check_shapes());
  m.params.layers[1].weight.resize(2, 5);
  EXPECT_THROW(m.check_shapes(), DataError);
}

TEST(EvverModel, ForwardBatchMatchesSingle) {
  auto m = EvverModel::initialize(small_config(2, true, {5}));
  mlp::Mat<double> in(3, 2);
  in << 0.5, -1, 2, 0.25, 0.1, 0.9;
  auto out = m.forward_batch(in);
  for (int c = 0; c < 2; ++c) {
    std::vector<double> x{in(0, c), in(1, c)};
    auto p = m.forward(std::span<const double>(x), in(2, c));
    for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(out(k, c), p[static_cast<std::size_t>(k)]);
  }
}

TEST(Mlp, GeluMatchesErfDefinition) {
  for (double z : {-3.0, -0.5, 0.0, 0.7, 4.0}) {
    EXPECT_NEAR(mlp::gelu(z), z * 0.5 * std::erfc(-z / std::sqrt(2.0)), 1e-15);
  }
}

}  // namespace
}  // namespace evver
