#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "evver/dcs.hpp"
#include "evver/evvernet.hpp"
#include "evver/metrics.hpp"
#include "evver/text_features.hpp"

namespace evver {

enum class BaselineKind { logreg, naive_bayes, decision_tree, mlp };
enum class BaselineFeatures { count, tfidf, dcs_only };

BaselineKind baseline_kind_from_name(std::string_view name);  // logreg | nb | tree | mlp
std::string_view baseline_kind_name(BaselineKind k) noexcept;
BaselineFeatures baseline_features_from_name(std::string_view name);  // count | tfidf | dcs
std::string_view baseline_features_name(BaselineFeatures f) noexcept;

/// Two columns per row: the normalized DCS scalar and a missing-data bit.
/// A record without factual-reporting and credibility ratings is missing;
/// its scalar is the encoding of an absent rating.
SparseRowMatrix dcs_feature_matrix(std::span<const DcsRecord> records);

// Softmax regression.
struct LogRegParams {
  mlp::Mat<double> weight;  // 3 x d
  mlp::Vec<double> bias;    // 3
};

/// Mean cross-entropy plus l2 * ||W||^2 (bias excluded); fills `grad` when
/// non-null.
double logreg_loss(const LogRegParams& p, const SparseRowMatrix& x, std::span<const int> labels, double l2,
                   LogRegParams* grad = nullptr);

// Multinomial naive Bayes over (possibly fractional) counts.
struct NaiveBayesParams {
  double alpha = 1.0;
  std::array<double, kNumClasses> log_prior{};  // -inf for classes absent from training
  mlp::Mat<double> log_likelihood;              // 3 x d
};

// CART tree; a sample goes left when x[feature] <= threshold.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
  std::array<std::size_t, kNumClasses> counts{};
};

struct DecisionTreeParams {
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t depth() const;
};

/// Gini impurity 1 - sum p_k^2 of a class histogram.
double gini(std::span<const std::size_t> counts);

struct BaselineModel {
  BaselineKind kind = BaselineKind::logreg;
  BaselineFeatures features = BaselineFeatures::tfidf;
  std::size_t input_dim = 0;
  std::variant<LogRegParams, NaiveBayesParams, DecisionTreeParams, EvverModel> params;

  /// Per-class scores (log-posterior, logits, leaf class shares or
  /// probabilities depending on the kind); argmax gives the prediction.
  std::vector<std::array<double, kNumClasses>> decision_scores(const SparseRowMatrix& x) const;

  /// Argmax of decision_scores, ties to the lowest class code.
  std::vector<int> predict(const SparseRowMatrix& x) const;
};

/// Full-batch gradient descent from a small seeded random start. Throws
/// NumericError when the loss becomes NaN or infinite.
BaselineModel fit_logreg(const SparseRowMatrix& x, std::span<const int> labels, double l2, double lr,
                         std::size_t epochs, std::uint64_t seed, BaselineFeatures features = BaselineFeatures::tfidf);

/// Throws DomainError when alpha <= 0 and DataError on negative features.
BaselineModel fit_naive_bayes(const SparseRowMatrix& x, std::span<const int> labels, double alpha,
                              BaselineFeatures features = BaselineFeatures::count);

/// Ties between candidate splits go to the lowest feature index, then the
/// lowest threshold. Thresholds are midpoints between adjacent distinct
/// values. A split needs a strict impurity decrease and min_leaf samples on
/// each side.
BaselineModel fit_decision_tree(const SparseRowMatrix& x, std::span<const int> labels, std::size_t max_depth,
                                std::size_t min_leaf, BaselineFeatures features = BaselineFeatures::dcs_only);

/// MLP through the EVVER-Net trainer without DCS input.
BaselineModel fit_mlp(const SparseRowMatrix& x, std::span<const int> labels, const EvverConfig& config,
                      BaselineFeatures features = BaselineFeatures::tfidf);

ClassificationReport evaluate_baseline(const BaselineModel& model, const SparseRowMatrix& x,
                                       std::span<const int> labels);

}  // namespace evver
