#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/training.hpp"
#include "test_support.hpp"

namespace evver {
namespace {

EvverConfig cluster_config() {
  EvverConfig c;
  c.input_dim = 16;
  c.hidden_dims = {32};
  c.dropout = 0.1;
  c.learning_rate = 1e-3;
  c.batch_size = 32;
  c.max_epochs = 200;
  c.seed = 42;
  return c;
}

bool same_params(const EvverModel& a, const EvverModel& b) {
  if (a.params.layers.size() != b.params.layers.size()) return false;
  for (std::size_t l = 0; l < a.params.layers.size(); ++l) {
    if (a.params.layers[l].weight != b.params.layers[l].weight) return false;
    if (a.params.layers[l].bias != b.params.layers[l].bias) return false;
  }
  return true;
}

TEST(TrainingSet, ValidateCatchesBadData) {
  auto d = test::gaussian_clusters(4, 3, 5.0, 1);
  EXPECT_NO_THROW(d.validate());
  auto bad = d;
  bad.labels[0] = 3;
  EXPECT_THROW(bad.validate(), DataError);
  bad = d;
  bad.dcs.assign(d.size(), 0.5f);
  bad.dcs[2] = 1.5f;
  EXPECT_THROW(bad.validate(), DataError);
  bad = d;
  bad.labels.pop_back();
  EXPECT_THROW(bad.validate(), DataError);
}

TEST(TrainingSet, SubsetAndInputs) {
  auto d = test::dcs_driven_set(3, 10, 0.7, 1);
  std::vector<std::size_t> pos{4, 1};
  auto s = d.subset(pos);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.labels[0], d.labels[4]);
  std::vector<std::size_t> all{0, 1};
  auto in = s.inputs<double>(all, true);
  ASSERT_EQ(in.rows(), 4);
  EXPECT_EQ(in(0, 0), static_cast<double>((*d.dense)(4, 0)));
  EXPECT_EQ(in(3, 1), static_cast<double>(d.dcs[1]));
}

TEST(Train, GaussianClustersReachHighTrainingAccuracy) {
  auto data = test::gaussian_clusters(16, 200, 5.0, 42);
  auto model = train(data, cluster_config());
  EXPECT_GE(evaluate(model, data).accuracy, 0.99);
  ASSERT_EQ(model.training_metrics.size(), 200u);
  EXPECT_LT(model.training_metrics.back().loss, model.training_metrics.front().loss);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  auto data = test::gaussian_clusters(16, 20, 5.0, 42);
  for (auto precision : {Precision::f32, Precision::f64}) {
    auto c = cluster_config();
    c.learning_rate = 0.0;
    c.max_epochs = 3;
    c.precision = precision;
    auto init = EvverModel::initialize(c);
    auto trained = train(data, c);
    EXPECT_TRUE(same_params(init, trained)) << precision_name(precision);
  }
}

TEST(Train, BitIdenticalAcrossRuns) {
  auto data = test::gaussian_clusters(16, 30, 5.0, 42);
  auto c = cluster_config();
  c.max_epochs = 5;
  EXPECT_TRUE(same_params(train(data, c), train(data, c)));
  c.precision = Precision::f64;
  EXPECT_TRUE(same_params(train(data, c), train(data, c)));
}

TEST(Train, DenseAndSparseAgree) {
  auto data = test::gaussian_clusters(6, 20, 5.0, 3);
  SparseRowMatrix sparse = data.dense->sparseView();
  auto sdata = TrainingSet::from_sparse(sparse, data.labels);
  auto c = cluster_config();
  c.input_dim = 6;
  c.max_epochs = 3;
  EXPECT_TRUE(same_params(train(data, c), train(sdata, c)));
}

TEST(Train, LargerL2GivesSmallerWeights) {
  auto data = test::gaussian_clusters(16, 50, 5.0, 42);
  auto c = cluster_config();
  c.max_epochs = 40;
  double previous = INFINITY;
  for (double l2 : {0.0, 1e-3, 1e-2, 1e-1}) {
    c.l2 = l2;
    double norm = train(data, c).params.squared_weight_norm();
    EXPECT_LT(norm, previous) << "l2=" << l2;
    previous = norm;
  }
}

TEST(Train, DcsPresenceMustMatchConfig) {
  auto with_dcs = test::dcs_driven_set(4, 30, 0.7, 1);
  auto c = cluster_config();
  c.input_dim = 4;
  c.max_epochs = 1;
  c.use_dcs = false;
  EXPECT_THROW(train(with_dcs, c), DataError);
  c.use_dcs = true;
  EXPECT_THROW(train(test::without_dcs(with_dcs), c), DataError);
  c.input_dim = 5;
  EXPECT_THROW(train(with_dcs, c), DataError);
}

TEST(Train, DivergenceRaisesNumericErrorWithLocation) {
  auto clusters = test::gaussian_clusters(16, 20, 5.0, 42);
  RowMatrixF huge = *clusters.dense * 1e30f;
  auto data = TrainingSet::from_dense(std::move(huge), clusters.labels);
  auto c = cluster_config();
  c.learning_rate = 1e30;
  c.max_epochs = 5;
  try {
    train(data, c);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("epoch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
  }
}

TEST(Train, ValidationSelectsBestEpoch) {
  auto data = test::gaussian_clusters(16, 40, 5.0, 42);
  auto val = test::gaussian_clusters(16, 20, 5.0, 43);
  auto c = cluster_config();
  c.max_epochs = 10;
  auto m = train(data, c, &val);
  ASSERT_TRUE(m.best_epoch);
  EXPECT_GE(*m.best_epoch, 1u);
  EXPECT_LE(*m.best_epoch, 10u);
  double best = 0;
  for (const auto& e : m.training_metrics) {
    ASSERT_TRUE(e.validation_accuracy);
    best = std::max(best, *e.validation_accuracy);
  }
  EXPECT_EQ(*m.training_metrics[*m.best_epoch - 1].validation_accuracy, best);
  EXPECT_DOUBLE_EQ(evaluate(m, val).accuracy, best);
}

TEST(PredictProba, RowsSumToOne) {
  auto data = test::dcs_driven_set(4, 50, 0.7, 1);
  EvverConfig c;
  c.input_dim = 4;
  c.use_dcs = true;
  c.hidden_dims = {8};
  auto m = EvverModel::initialize(c);
  auto p = predict_proba(m, data);
  ASSERT_EQ(p.size(), 50u);
  for (const auto& row : p) EXPECT_NEAR(row[0] + row[1] + row[2], 1.0, 1e-12);
}

TEST(Evaluate, ConstantModelScoresMajorityShare) {
  RowMatrixF x = RowMatrixF::Zero(10, 2);
  std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 2, 2, 2};
  auto data = TrainingSet::from_dense(x, labels);
  EvverConfig c;
  c.input_dim = 2;
  c.hidden_dims = {3};
  auto r = evaluate(EvverModel::zeros(c), data);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
}

TEST(GradCheck, RandomSmallModel) {
  EvverConfig c;
  c.input_dim = 8;
  c.hidden_dims = {4};
  auto r = grad_check(c, 5, 1e-4);
  EXPECT_TRUE(r.passed) << nlohmann::json(r).dump();
  EXPECT_LT(r.max_relative_error, 1e-4);
  EXPECT_EQ(r.parameters_checked, c.parameter_count());
}

TEST(GradCheck, ZeroInputRowsGetZeroFirstLayerGradient) {
  EvverConfig c;
  c.input_dim = 5;
  c.hidden_dims = {4};
  auto m = EvverModel::initialize(c);
  mlp::Mat<double> in = mlp::Mat<double>::Random(5, 6);
  in.row(1).setZero();
  in.row(3).setZero();
  std::vector<int> labels{0, 1, 2, 0, 1, 2};
  mlp::Gradients<double> g;
  mlp::loss_and_gradients<double>(m.params, in, labels, 0.0, 0.0, nullptr, &g);
  EXPECT_TRUE(g.weight[0].col(1).isZero(0.0));
  EXPECT_TRUE(g.weight[0].col(3).isZero(0.0));
  EXPECT_FALSE(g.weight[0].col(0).isZero(0.0));
}

TEST(GradCheck, L2AddsTwiceLambdaW) {
  EvverConfig c;
  c.input_dim = 4;
  c.hidden_dims = {3, 3};
  auto m = EvverModel::initialize(c);
  mlp::Mat<double> in = mlp::Mat<double>::Random(4, 5);
  std::vector<int> labels{0, 1, 2, 2, 1};
  const double l2 = 1e-3;
  mlp::Gradients<double> plain, reg;
  double base = mlp::loss_and_gradients<double>(m.params, in, labels, 0.0, 0.0, nullptr, &plain);
  double with = mlp::loss_and_gradients<double>(m.params, in, labels, l2, 0.0, nullptr, &reg);
  EXPECT_NEAR(with - base, l2 * m.params.squared_weight_norm(), 1e-15);
  for (std::size_t l = 0; l < plain.weight.size(); ++l) {
    mlp::Mat<double> diff = reg.weight[l] - plain.weight[l];
    EXPECT_LT((diff - 2.0 * l2 * m.params.layers[l].weight).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(reg.bias[l], plain.bias[l]);
  }
  EXPECT_TRUE(grad_check(m.params, in, labels, l2).passed);
}

TEST(GradCheck, ZeroToleranceFails) {
  EvverConfig c;
  c.input_dim = 3;
  c.hidden_dims = {3};
  auto r = grad_check(c, 4, 0.0);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.worst_parameter.empty());
}

TEST(StratifiedFolds, OnePerClassPerFold) {
  std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2};
  auto folds = stratified_folds(labels, 3, 42);
  std::array<std::array<int, 3>, 3> counts{};
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[folds[i]][static_cast<std::size_t>(labels[i])];
  for (const auto& f : counts) EXPECT_EQ(f, (std::array<int, 3>{1, 1, 1}));
  EXPECT_EQ(folds, stratified_folds(labels, 3, 42));
}

TEST(StratifiedFolds, TooFewMembersIsError) {
  std::vector<int> labels{0, 0, 0, 1, 1, 2, 2, 2};
  EXPECT_THROW(stratified_folds(labels, 3, 42), DataError);
}

TEST(CrossValidate, FoldStatistics) {
  auto data = test::gaussian_clusters(16, 30, 5.0, 42);
  auto c = cluster_config();
  c.max_epochs = 20;
  auto r = cross_validate(data, c, 3, 2);
  ASSERT_EQ(r.fold_accuracies.size(), 3u);
  double mean = std::accumulate(r.fold_accuracies.begin(), r.fold_accuracies.end(), 0.0) / 3.0;
  double ss = 0;
  for (double a : r.fold_accuracies) ss += (a - mean) * (a - mean);
  EXPECT_NEAR(r.mean, mean, 1e-15);
  EXPECT_NEAR(r.stddev, std::sqrt(ss / 2.0), 1e-15);
  auto again = cross_validate(data, c, 3, 1);
  EXPECT_EQ(again.fold_accuracies, r.fold_accuracies);
}

TEST(GridSpec, ReferenceGridCardinality) {
  auto g = GridSpec::reference_grid();
  EXPECT_EQ(g.cardinality(), 648u);
  EvverConfig base;
  base.input_dim = 10;
  auto configs = g.expand(base);
  ASSERT_EQ(configs.size(), 648u);
  for (const auto& c : configs) {
    EXPECT_EQ(c.input_dim, 10u);
    EXPECT_NO_THROW(c.validate());
  }
  nlohmann::json j = g;
  EXPECT_EQ(j.get<GridSpec>().cardinality(), 648u);
}

TEST(GridSpec, ExplicitTuples) {
  GridSpec g;
  g.hidden_tuples = {{8, 4}};
  g.hidden_sizes = {16};
  g.layer_counts = {1};
  g.learning_rates = {1e-3};
  g.batch_sizes = {32};
  g.dropouts = {0.1};
  g.l2s = {0.0};
  EXPECT_EQ(g.cardinality(), 2u);
  auto archs = g.architectures();
  EXPECT_NE(std::find(archs.begin(), archs.end(), std::vector<std::size_t>{8, 4}), archs.end());
}

TEST(GridSearch, SingleConfiguration) {
  auto data = test::gaussian_clusters(16, 15, 5.0, 42);
  GridSpec g;
  g.hidden_sizes = {8};
  g.layer_counts = {1};
  g.learning_rates = {1e-2};
  g.batch_sizes = {16};
  g.dropouts = {0.1};
  g.l2s = {0.0};
  auto base = cluster_config();
  base.max_epochs = 5;
  auto results = grid_search(data, g, base, 3, 1);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].config.hidden_dims, std::vector<std::size_t>{8});
  auto cv = cross_validate(data, results[0].config, 3);
  EXPECT_EQ(results[0].cv.fold_accuracies, cv.fold_accuracies);
}

TEST(GridSearch, RankedByMeanAccuracy) {
  auto data = test::gaussian_clusters(16, 60, 5.0, 42);
  GridSpec g;
  g.hidden_sizes = {8, 32};
  g.layer_counts = {1};
  g.learning_rates = {1e-1, 1e-3, 1e-5};
  g.batch_sizes = {32};
  g.dropouts = {0.1};
  g.l2s = {0.0};
  auto base = cluster_config();
  base.max_epochs = 20;
  auto results = grid_search(data, g, base, 3, 2);
  ASSERT_EQ(results.size(), 6u);
  for (std::size_t i = 1; i < results.size(); ++i) {
    EXPECT_GE(results[i - 1].cv.mean, results[i].cv.mean) << "rank " << i;
  }
  EXPECT_NE(results.back().config.learning_rate, 1e-1);
}

}  // namespace
}  // namespace evver
