#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evver/embeddings.hpp"
#include "evver/evvernet.hpp"
#include "evver/metrics.hpp"
#include "evver/text_features.hpp"

namespace evver {

/// (features, dcs, label) triples backed by a shared dense or sparse matrix.
/// `rows[i]` selects the matrix row of sample i, so subsets share storage.
struct TrainingSet {
  std::shared_ptr<const RowMatrixF> dense;
  std::shared_ptr<const SparseRowMatrix> sparse;
  std::vector<std::size_t> rows;
  std::vector<float> dcs;  // one per sample, or empty
  std::vector<int> labels;

  static TrainingSet from_dense(RowMatrixF features, std::vector<int> labels, std::vector<float> dcs = {});
  static TrainingSet from_sparse(SparseRowMatrix features, std::vector<int> labels, std::vector<float> dcs = {});

  std::size_t size() const { return rows.size(); }
  std::size_t feature_dim() const;
  bool has_dcs() const { return !dcs.empty(); }

  /// Throws DataError on length mismatches, row indices out of range,
  /// labels outside {0,1,2} or DCS values outside [0,1].
  void validate() const;

  /// Samples at `positions`, in that order.
  TrainingSet subset(std::span<const std::size_t> positions) const;

  /// Column-per-sample input block for `positions`; appends the DCS scalar
  /// as the last row when `with_dcs`.
  template <class T>
  mlp::Mat<T> inputs(std::span<const std::size_t> positions, bool with_dcs) const;
};

/// Trains with Adam (beta1 0.9, beta2 0.999, eps 1e-8), inverted dropout and
/// L2 on weights, in minibatches drawn from a seeded per-epoch shuffle. With a
/// validation set the parameters of the epoch with the best validation
/// accuracy (earliest on ties) are returned. A learning rate of 0 is
/// accepted and leaves the initial parameters unchanged.
///
/// Throws DataError when the data do not match the config (feature
/// dimension, DCS presence) and NumericError naming the epoch and batch when
/// the loss becomes NaN or infinite.
EvverModel train(const TrainingSet& data, const EvverConfig& config, const TrainingSet* validation = nullptr);

/// Probabilities for every sample, in order.
std::vector<std::array<double, kNumClasses>> predict_proba(const EvverModel& model, const TrainingSet& data);

/// Argmax predictions (ties to the lowest class code) scored against labels.
ClassificationReport evaluate(const EvverModel& model, const TrainingSet& data);

struct GradCheckReport {
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::size_t parameters_checked = 0;
  std::string worst_parameter;
};

void to_json(nlohmann::json& j, const GradCheckReport& r);

inline constexpr double kGradCheckStep = 1e-5;

/// Analytic vs central-difference gradients for every parameter of `params`
/// on the given batch, in double precision with dropout disabled. The
/// relative error of one entry is |a - n| / max(|a| + |n|, 1e-7).
GradCheckReport grad_check(const mlp::Params<double>& params, const mlp::Mat<double>& inputs,
                           std::span<const int> labels, double l2, double tolerance = 1e-4);

/// Random model shaped by `config` (seeded by config.seed, non-zero biases)
/// on `sample_count` random samples with random labels. Dropout in `config`
/// is ignored.
GradCheckReport grad_check(const EvverConfig& config, std::size_t sample_count, double tolerance = 1e-4);

/// Stratified fold index for every sample: each class is shuffled with a
/// generator forked from `seed` and dealt round-robin. Throws DataError when
/// any class has fewer members than `folds`.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed);

struct CvResult {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

void to_json(nlohmann::json& j, const CvResult& r);

/// k-fold cross-validation; folds are drawn with config.seed.
CvResult cross_validate(const TrainingSet& data, const EvverConfig& config, std::size_t folds = 3,
                        std::size_t workers = 1);

struct GridSpec {
  std::set<std::size_t> hidden_sizes;
  std::set<std::size_t> layer_counts;
  /// Explicit per-layer tuples, enumerated in addition to the homogeneous
  /// hidden_sizes x layer_counts architectures.
  std::vector<std::vector<std::size_t>> hidden_tuples;
  std::set<double> learning_rates;
  std::set<std::size_t> batch_sizes;
  std::set<double> dropouts;
  std::set<double> l2s;

  void validate() const;
  std::vector<std::vector<std::size_t>> architectures() const;
  std::size_t cardinality() const;

  /// Every combination, with the remaining fields copied from `base`.
  std::vector<EvverConfig> expand(const EvverConfig& base) const;

  /// h in {512, 1024}, l in {1, 2, 3}, lr in {1e-3, 5e-4, 1e-4, 5e-5},
  /// b in {512, 1024, 2048}, d in {0.1, 0.2, 0.25}, r in {0, 1e-2, 1e-3}.
  static GridSpec reference_grid();
};

void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);

struct GridResult {
  EvverConfig config;
  CvResult cv;
  std::string failure;  // non-empty when training diverged; such entries rank last
};

void to_json(nlohmann::json& j, const GridResult& r);

/// Cross-validates every combination (in parallel across combinations) and
/// ranks by mean accuracy, then fewer parameters, then lower learning rate.
std::vector<GridResult> grid_search(const TrainingSet& data, const GridSpec& grid, const EvverConfig& base,
                                    std::size_t folds = 3, std::size_t workers = 1);

}  // namespace evver
