#include "evver/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/log.hpp"
#include "evver/parallel.hpp"
#include "evver/rng.hpp"

namespace evver {

// ---------------------------------------------------------------- dataset

namespace {

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

TrainingSet TrainingSet::from_dense(RowMatrixF features, std::vector<int> labels, std::vector<float> dcs) {
  TrainingSet t;
  t.rows = iota_rows(static_cast<std::size_t>(features.rows()));
  t.dense = std::make_shared<const RowMatrixF>(std::move(features));
  t.labels = std::move(labels);
  t.dcs = std::move(dcs);
  t.validate();
  return t;
}

TrainingSet TrainingSet::from_sparse(SparseRowMatrix features, std::vector<int> labels, std::vector<float> dcs) {
  TrainingSet t;
  features.makeCompressed();
  t.rows = iota_rows(static_cast<std::size_t>(features.rows()));
  t.sparse = std::make_shared<const SparseRowMatrix>(std::move(features));
  t.labels = std::move(labels);
  t.dcs = std::move(dcs);
  t.validate();
  return t;
}

std::size_t TrainingSet::feature_dim() const {
  if (dense) return static_cast<std::size_t>(dense->cols());
  if (sparse) return static_cast<std::size_t>(sparse->cols());
  return 0;
}

void TrainingSet::validate() const {
  if (!dense == !sparse) throw DataError("training set needs exactly one feature matrix");
  std::size_t matrix_rows = dense ? static_cast<std::size_t>(dense->rows()) : static_cast<std::size_t>(sparse->rows());
  if (labels.size() != rows.size()) {
    throw DataError("training set has " + std::to_string(rows.size()) + " samples but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (!dcs.empty() && dcs.size() != rows.size()) {
    throw DataError("training set has " + std::to_string(rows.size()) + " samples but " +
                    std::to_string(dcs.size()) + " DCS values");
  }
  for (auto r : rows) {
    if (r >= matrix_rows) throw DataError("training set row " + std::to_string(r) + " out of range");
  }
  for (auto l : labels) {
    if (l < 0 || l >= kNumClasses) throw DataError("label " + std::to_string(l) + " outside {0,1,2}");
  }
  for (auto s : dcs) {
    if (!(s >= 0.0f && s <= 1.0f)) throw DataError("DCS value outside [0,1]");
  }
}

TrainingSet TrainingSet::subset(std::span<const std::size_t> positions) const {
  TrainingSet t;
  t.dense = dense;
  t.sparse = sparse;
  t.rows.reserve(positions.size());
  t.labels.reserve(positions.size());
  for (auto p : positions) {
    t.rows.push_back(rows.at(p));
    t.labels.push_back(labels.at(p));
    if (!dcs.empty()) t.dcs.push_back(dcs[p]);
  }
  return t;
}

template <class T>
mlp::Mat<T> TrainingSet::inputs(std::span<const std::size_t> positions, bool with_dcs) const {
  const auto d = static_cast<Eigen::Index>(feature_dim());
  mlp::Mat<T> x = mlp::Mat<T>::Zero(d + (with_dcs ? 1 : 0), static_cast<Eigen::Index>(positions.size()));
  for (std::size_t c = 0; c < positions.size(); ++c) {
    auto col = static_cast<Eigen::Index>(c);
    std::size_t r = rows[positions[c]];
    if (dense) {
      x.col(col).head(d) = dense->row(static_cast<Eigen::Index>(r)).transpose().template cast<T>();
    } else {
      for (SparseRowMatrix::InnerIterator it(*sparse, static_cast<std::int64_t>(r)); it; ++it) {
        x(static_cast<Eigen::Index>(it.col()), col) = static_cast<T>(it.value());
      }
    }
    if (with_dcs) x(d, col) = static_cast<T>(dcs[positions[c]]);
  }
  return x;
}

template mlp::Mat<float> TrainingSet::inputs<float>(std::span<const std::size_t>, bool) const;
template mlp::Mat<double> TrainingSet::inputs<double>(std::span<const std::size_t>, bool) const;

// ---------------------------------------------------------------- training

namespace {

constexpr std::size_t kInferenceChunk = 1024;

void check_compatible(const TrainingSet& data, const EvverConfig& config, const char* what) {
  data.validate();
  if (data.feature_dim() != config.input_dim) {
    throw DataError(std::string(what) + " feature dimension " + std::to_string(data.feature_dim()) +
                    " does not match config input_dim " + std::to_string(config.input_dim));
  }
  if (config.use_dcs && !data.has_dcs()) {
    throw DataError(std::string(what) + " has no DCS values but config.use_dcs is set");
  }
  if (!config.use_dcs && data.has_dcs()) {
    throw DataError(std::string(what) + " carries DCS values but config.use_dcs is not set");
  }
}

template <class T>
struct Adam {
  static constexpr T beta1 = T(0.9);
  static constexpr T beta2 = T(0.999);
  static constexpr T eps = T(1e-8);

  mlp::Gradients<T> m, v;
  std::size_t t = 0;

  explicit Adam(const mlp::Params<T>& p) {
    for (const auto& l : p.layers) {
      m.weight.push_back(mlp::Mat<T>::Zero(l.weight.rows(), l.weight.cols()));
      m.bias.push_back(mlp::Vec<T>::Zero(l.bias.size()));
    }
    v = m;
  }

  template <class P, class G, class M>
  static void update(P& param, const G& grad, M& m1, M& m2, T lr, T c1, T c2) {
    m1 = beta1 * m1 + (T(1) - beta1) * grad;
    m2 = beta2 * m2 + (T(1) - beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
  }

  void step(mlp::Params<T>& p, const mlp::Gradients<T>& g, T lr) {
    ++t;
    T c1 = T(1) - std::pow(beta1, static_cast<T>(t));
    T c2 = T(1) - std::pow(beta2, static_cast<T>(t));
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      update(p.layers[l].weight, g.weight[l], m.weight[l], v.weight[l], lr, c1, c2);
      update(p.layers[l].bias, g.bias[l], m.bias[l], v.bias[l], lr, c1, c2);
    }
  }
};

double accuracy_of(const EvverModel& model, const TrainingSet& data) {
  return evaluate(model, data).accuracy;
}

template <class T>
EvverModel train_impl(const TrainingSet& data, const EvverConfig& config, const TrainingSet* validation) {
  EvverModel model = EvverModel::initialize(config);
  mlp::Params<T> p = model.params.template cast<T>();
  Adam<T> adam(p);
  Rng shuffle_rng = Rng::fork(config.seed, "evvernet/shuffle");
  Rng dropout_rng = Rng::fork(config.seed, "evvernet/dropout");
  const T lr = static_cast<T>(config.learning_rate);
  const T l2 = static_cast<T>(config.l2);
  const T dropout = static_cast<T>(config.dropout);

  std::vector<std::size_t> order = iota_rows(data.size());
  std::optional<mlp::Params<double>> best;
  double best_accuracy = -1.0;
  mlp::Gradients<T> grads;
  mlp::Mat<T> prob;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> positions(order.data() + start, end - start);
      mlp::Mat<T> x = data.template inputs<T>(positions, config.use_dcs);
      std::vector<int> labels(positions.size());
      for (std::size_t k = 0; k < positions.size(); ++k) labels[k] = data.labels[positions[k]];

      T loss = mlp::loss_and_gradients(p, x, std::span<const int>(labels), l2, dropout, &dropout_rng, &grads, &prob);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw NumericError("non-finite loss " + std::to_string(static_cast<double>(loss)) + " at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batch_index + 1));
      }
      adam.step(p, grads, lr);
      loss_sum += static_cast<double>(loss) * static_cast<double>(positions.size());
      for (Eigen::Index c = 0; c < prob.cols(); ++c) {
        std::array<T, kNumClasses> col{prob(0, c), prob(1, c), prob(2, c)};
        if (argmax_lowest(col) == labels[static_cast<std::size_t>(c)]) ++correct;
      }
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.loss = loss_sum / static_cast<double>(data.size());
    metrics.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    if (validation) {
      model.params = p.template cast<double>();
      double acc = accuracy_of(model, *validation);
      metrics.validation_accuracy = acc;
      if (acc > best_accuracy) {
        best_accuracy = acc;
        best = model.params;
        model.best_epoch = epoch;
      }
    }
    log::debug("epoch", {{"epoch", epoch}, {"loss", metrics.loss}, {"train_accuracy", metrics.train_accuracy}});
    model.training_metrics.push_back(metrics);
  }
  model.params = best ? std::move(*best) : p.template cast<double>();
  return model;
}

}  // namespace

EvverModel train(const TrainingSet& data, const EvverConfig& config, const TrainingSet* validation) {
  config.validate(/*allow_zero_lr=*/true);
  if (data.size() == 0) throw DataError("training set is empty");
  check_compatible(data, config, "training set");
  if (validation) check_compatible(*validation, config, "validation set");
  if (config.precision == Precision::f64) return train_impl<double>(data, config, validation);
  return train_impl<float>(data, config, validation);
}

std::vector<std::array<double, kNumClasses>> predict_proba(const EvverModel& model, const TrainingSet& data) {
  check_compatible(data, model.config, "evaluation set");
  std::vector<std::array<double, kNumClasses>> out(data.size());
  std::vector<std::size_t> positions;
  for (std::size_t start = 0; start < data.size(); start += kInferenceChunk) {
    std::size_t end = std::min(data.size(), start + kInferenceChunk);
    positions.resize(end - start);
    std::iota(positions.begin(), positions.end(), start);
    auto prob = model.forward_batch(data.inputs<double>(positions, model.config.use_dcs));
    for (std::size_t k = 0; k < positions.size(); ++k) {
      auto c = static_cast<Eigen::Index>(k);
      out[start + k] = {prob(0, c), prob(1, c), prob(2, c)};
    }
  }
  return out;
}

ClassificationReport evaluate(const EvverModel& model, const TrainingSet& data) {
  auto probs = predict_proba(model, data);
  std::vector<int> predicted(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) predicted[i] = argmax_lowest(probs[i]);
  return classification_report(data.labels, predicted);
}

// ---------------------------------------------------------------- gradient check

void to_json(nlohmann::json& j, const GradCheckReport& r) {
  j = nlohmann::json{{"max_relative_error", r.max_relative_error},
                     {"tolerance", r.tolerance},
                     {"passed", r.passed},
                     {"parameters_checked", r.parameters_checked},
                     {"worst_parameter", r.worst_parameter}};
}

GradCheckReport grad_check(const mlp::Params<double>& params, const mlp::Mat<double>& inputs,
                           std::span<const int> labels, double l2, double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  mlp::Gradients<double> analytic;
  mlp::loss_and_gradients(params, inputs, labels, l2, 0.0, nullptr, &analytic);

  mlp::Params<double> probe = params;
  auto loss_at = [&] { return mlp::loss_and_gradients<double>(probe, inputs, labels, l2, 0.0, nullptr, nullptr); };
  auto check = [&](double& slot, double grad, const std::string& name) {
    const double saved = slot;
    slot = saved + kGradCheckStep;
    double up = loss_at();
    slot = saved - kGradCheckStep;
    double down = loss_at();
    slot = saved;
    double numeric = (up - down) / (2.0 * kGradCheckStep);
    double rel = std::abs(grad - numeric) / std::max(std::abs(grad) + std::abs(numeric), 1e-7);
    ++report.parameters_checked;
    if (report.worst_parameter.empty() || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_parameter = name;
    }
  };

  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        check(layer.weight(r, c), analytic.weight[l](r, c),
              "W" + std::to_string(l) + "[" + std::to_string(r) + "," + std::to_string(c) + "]");
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      check(layer.bias(r), analytic.bias[l](r), "b" + std::to_string(l) + "[" + std::to_string(r) + "]");
    }
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

GradCheckReport grad_check(const EvverConfig& config, std::size_t sample_count, double tolerance) {
  EvverConfig c = config;
  c.precision = Precision::f64;
  c.dropout = 0.0;
  c.validate(/*allow_zero_lr=*/true);
  if (sample_count == 0) throw DomainError("grad_check needs at least one sample");
  EvverModel model = EvverModel::initialize(c);
  Rng rng = Rng::fork(c.seed, "evvernet/grad_check");
  for (auto& layer : model.params.layers) {
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = 0.1 * rng.normal();
  }
  auto n = static_cast<Eigen::Index>(sample_count);
  mlp::Mat<double> x(static_cast<Eigen::Index>(c.model_input_dim()), n);
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(c.input_dim); ++r) x(r, col) = rng.normal();
    if (c.use_dcs) x(static_cast<Eigen::Index>(c.input_dim), col) = rng.uniform01();
  }
  std::vector<int> labels(sample_count);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_index(kNumClasses));
  return grad_check(model.params, x, labels, c.l2, tolerance);
}

// ---------------------------------------------------------------- cross-validation

void to_json(nlohmann::json& j, const CvResult& r) {
  j = nlohmann::json{{"fold_accuracies", r.fold_accuracies}, {"mean", r.mean}, {"stddev", r.stddev}};
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= kNumClasses) throw DataError("label outside {0,1,2}");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.size() < folds) {
      throw DataError("class " + std::string(label_name(static_cast<ClassLabel>(c))) + " has " +
                      std::to_string(members.size()) + " samples, so at least one of " + std::to_string(folds) +
                      " folds would lack it");
    }
    Rng rng = Rng::fork(seed, "cv/" + std::to_string(c));
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t k = 0; k < members.size(); ++k) fold_of[members[k]] = k % folds;
  }
  return fold_of;
}

CvResult cross_validate(const TrainingSet& data, const EvverConfig& config, std::size_t folds, std::size_t workers) {
  if (data.size() < folds) throw DataError("dataset smaller than fold count");
  auto fold_of = stratified_folds(data.labels, folds, config.seed);
  CvResult result;
  result.fold_accuracies.resize(folds);
  parallel_for(folds, workers, [&](std::size_t f) {
    std::vector<std::size_t> train_pos, eval_pos;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? eval_pos : train_pos).push_back(i);
    auto model = train(data.subset(train_pos), config);
    result.fold_accuracies[f] = evaluate(model, data.subset(eval_pos)).accuracy;
  });
  result.mean = std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
                static_cast<double>(folds);
  double ss = 0.0;
  for (double a : result.fold_accuracies) ss += (a - result.mean) * (a - result.mean);
  result.stddev = std::sqrt(ss / static_cast<double>(folds - 1));
  return result;
}

// ---------------------------------------------------------------- grid search

void GridSpec::validate() const {
  if (architectures().empty()) throw DomainError("grid: no hidden-layer architectures");
  if (learning_rates.empty() || batch_sizes.empty() || dropouts.empty() || l2s.empty()) {
    throw DomainError("grid: every hyperparameter set must be non-empty");
  }
}

std::vector<std::vector<std::size_t>> GridSpec::architectures() const {
  std::vector<std::vector<std::size_t>> out;
  for (auto l : layer_counts) {
    for (auto h : hidden_sizes) out.emplace_back(l, h);
  }
  for (const auto& t : hidden_tuples) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

std::size_t GridSpec::cardinality() const {
  return architectures().size() * learning_rates.size() * batch_sizes.size() * dropouts.size() * l2s.size();
}

std::vector<EvverConfig> GridSpec::expand(const EvverConfig& base) const {
  validate();
  std::vector<EvverConfig> out;
  for (const auto& arch : architectures()) {
    for (double lr : learning_rates) {
      for (auto b : batch_sizes) {
        for (double d : dropouts) {
          for (double r : l2s) {
            EvverConfig c = base;
            c.hidden_dims = arch;
            c.learning_rate = lr;
            c.batch_size = b;
            c.dropout = d;
            c.l2 = r;
            out.push_back(c);
          }
        }
      }
    }
  }
  return out;
}

GridSpec GridSpec::reference_grid() {
  GridSpec g;
  g.hidden_sizes = {512, 1024};
  g.layer_counts = {1, 2, 3};
  g.learning_rates = {1e-3, 5e-4, 1e-4, 5e-5};
  g.batch_sizes = {512, 1024, 2048};
  g.dropouts = {0.1, 0.2, 0.25};
  g.l2s = {0.0, 1e-2, 1e-3};
  return g;
}

void to_json(nlohmann::json& j, const GridSpec& g) {
  j = nlohmann::json{{"hidden_sizes", g.hidden_sizes}, {"layer_counts", g.layer_counts},
                     {"hidden_tuples", g.hidden_tuples}, {"learning_rates", g.learning_rates},
                     {"batch_sizes", g.batch_sizes},   {"dropouts", g.dropouts},
                     {"l2s", g.l2s}};
}

void from_json(const nlohmann::json& j, GridSpec& g) {
  g.hidden_sizes = j.value("hidden_sizes", std::set<std::size_t>{});
  g.layer_counts = j.value("layer_counts", std::set<std::size_t>{});
  g.hidden_tuples = j.value("hidden_tuples", std::vector<std::vector<std::size_t>>{});
  g.learning_rates = j.at("learning_rates").get<std::set<double>>();
  g.batch_sizes = j.at("batch_sizes").get<std::set<std::size_t>>();
  g.dropouts = j.at("dropouts").get<std::set<double>>();
  g.l2s = j.at("l2s").get<std::set<double>>();
}

void to_json(nlohmann::json& j, const GridResult& r) {
  j = nlohmann::json{{"config", r.config}, {"cv", r.cv}};
  if (!r.failure.empty()) j["failure"] = r.failure;
}

std::vector<GridResult> grid_search(const TrainingSet& data, const GridSpec& grid, const EvverConfig& base,
                                    std::size_t folds, std::size_t workers) {
  auto configs = grid.expand(base);
  std::vector<GridResult> results(configs.size());
  parallel_for(configs.size(), workers, [&](std::size_t i) {
    results[i].config = configs[i];
    try {
      results[i].cv = cross_validate(data, configs[i], folds, 1);
    } catch (const NumericError& e) {
      results[i].failure = e.what();
      log::warn("grid configuration diverged", {{"index", i}, {"error", e.what()}});
    }
  });
  std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
    bool fa = !a.failure.empty(), fb = !b.failure.empty();
    if (fa != fb) return fb;
    if (a.cv.mean != b.cv.mean) return a.cv.mean > b.cv.mean;
    auto pa = a.config.parameter_count(), pb = b.config.parameter_count();
    if (pa != pb) return pa < pb;
    return a.config.learning_rate < b.config.learning_rate;
  });
  return results;
}

}  // namespace evver
