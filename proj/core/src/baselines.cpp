#include "evver/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evver/error.hpp"
#include "evver/rng.hpp"
#include "evver/training.hpp"

namespace evver {

BaselineKind baseline_kind_from_name(std::string_view name) {
  if (name == "logreg") return BaselineKind::logreg;
  if (name == "nb" || name == "naive_bayes") return BaselineKind::naive_bayes;
  if (name == "tree" || name == "decision_tree") return BaselineKind::decision_tree;
  if (name == "mlp") return BaselineKind::mlp;
  throw DomainError("unknown baseline kind: " + std::string(name));
}

std::string_view baseline_kind_name(BaselineKind k) noexcept {
  switch (k) {
    case BaselineKind::logreg: return "logreg";
    case BaselineKind::naive_bayes: return "nb";
    case BaselineKind::decision_tree: return "tree";
    case BaselineKind::mlp: return "mlp";
  }
  return "logreg";
}

BaselineFeatures baseline_features_from_name(std::string_view name) {
  if (name == "count") return BaselineFeatures::count;
  if (name == "tfidf") return BaselineFeatures::tfidf;
  if (name == "dcs" || name == "dcs_only") return BaselineFeatures::dcs_only;
  throw DomainError("unknown baseline feature mode: " + std::string(name));
}

std::string_view baseline_features_name(BaselineFeatures f) noexcept {
  switch (f) {
    case BaselineFeatures::count: return "count";
    case BaselineFeatures::tfidf: return "tfidf";
    case BaselineFeatures::dcs_only: return "dcs";
  }
  return "tfidf";
}

SparseRowMatrix dcs_feature_matrix(std::span<const DcsRecord> records) {
  std::vector<Eigen::Triplet<float, std::int64_t>> t;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    bool missing = !r.factual_reporting && !r.credibility_rating;
    double s = missing ? normalize_dcs(kDcsAbsent) : r.normalized;
    auto row = static_cast<std::int64_t>(i);
    t.emplace_back(row, 0, static_cast<float>(s));
    if (missing) t.emplace_back(row, 1, 1.0f);
  }
  SparseRowMatrix m(static_cast<std::int64_t>(records.size()), 2);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

namespace {

void check_inputs(const SparseRowMatrix& x, std::span<const int> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw DataError("feature rows (" + std::to_string(x.rows()) + ") != labels (" + std::to_string(labels.size()) +
                    ")");
  }
  if (labels.empty()) throw DataError("no training samples");
  for (int l : labels) {
    if (l < 0 || l >= kNumClasses) throw DataError("label " + std::to_string(l) + " outside {0,1,2}");
  }
}

void check_dim(const BaselineModel& m, const SparseRowMatrix& x) {
  if (static_cast<std::size_t>(x.cols()) != m.input_dim) {
    throw DataError("dimension mismatch: features have " + std::to_string(x.cols()) + " columns, model expects " +
                    std::to_string(m.input_dim));
  }
}

// n x 3 logits.
mlp::Mat<double> logits(const LogRegParams& p, const SparseRowMatrix& x) {
  mlp::Mat<double> z = x.cast<double>() * p.weight.transpose();
  z.rowwise() += p.bias.transpose();
  return z;
}

}  // namespace

double logreg_loss(const LogRegParams& p, const SparseRowMatrix& x, std::span<const int> labels, double l2,
                   LogRegParams* grad) {
  const auto n = x.rows();
  mlp::Mat<double> prob = logits(p, x).transpose();  // 3 x n
  mlp::softmax_columns(prob);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss -= std::log(std::max(prob(labels[static_cast<std::size_t>(i)], i), std::numeric_limits<double>::min()));
  }
  loss = loss / static_cast<double>(n) + l2 * p.weight.squaredNorm();
  if (grad) {
    mlp::Mat<double> delta = prob;
    for (Eigen::Index i = 0; i < n; ++i) delta(labels[static_cast<std::size_t>(i)], i) -= 1.0;
    delta /= static_cast<double>(n);
    // (3 x n) * (n x d), computed as ((d x n) * (n x 3))^T to stay sparse-first
    grad->weight = (x.cast<double>().transpose() * delta.transpose()).transpose();
    grad->weight += 2.0 * l2 * p.weight;
    grad->bias = delta.rowwise().sum();
  }
  return loss;
}

BaselineModel fit_logreg(const SparseRowMatrix& x, std::span<const int> labels, double l2, double lr,
                         std::size_t epochs, std::uint64_t seed, BaselineFeatures features) {
  check_inputs(x, labels);
  if (!(l2 >= 0.0) || !(lr > 0.0)) throw DomainError("logreg: need l2 >= 0 and lr > 0");
  LogRegParams p{mlp::Mat<double>(kNumClasses, x.cols()), mlp::Vec<double>::Zero(kNumClasses)};
  Rng rng = Rng::fork(seed, "baseline/logreg");
  for (Eigen::Index k = 0; k < p.weight.size(); ++k) p.weight.data()[k] = 0.01 * rng.normal();
  LogRegParams g;
  for (std::size_t e = 0; e < epochs; ++e) {
    double loss = logreg_loss(p, x, labels, l2, &g);
    if (!std::isfinite(loss)) throw NumericError("logreg diverged at epoch " + std::to_string(e + 1));
    p.weight -= lr * g.weight;
    p.bias -= lr * g.bias;
  }
  return {BaselineKind::logreg, features, static_cast<std::size_t>(x.cols()), std::move(p)};
}

BaselineModel fit_naive_bayes(const SparseRowMatrix& x, std::span<const int> labels, double alpha,
                              BaselineFeatures features) {
  if (!(alpha > 0.0)) throw DomainError("naive Bayes alpha must be > 0, got " + std::to_string(alpha));
  check_inputs(x, labels);
  const auto d = x.cols();
  mlp::Mat<double> counts = mlp::Mat<double>::Zero(kNumClasses, d);
  std::array<std::size_t, kNumClasses> class_n{};
  for (std::int64_t i = 0; i < x.rows(); ++i) {
    int c = labels[static_cast<std::size_t>(i)];
    ++class_n[static_cast<std::size_t>(c)];
    for (SparseRowMatrix::InnerIterator it(x, i); it; ++it) {
      if (it.value() < 0.0f) throw DataError("naive Bayes requires nonnegative features");
      counts(c, static_cast<Eigen::Index>(it.col())) += static_cast<double>(it.value());
    }
  }
  NaiveBayesParams p;
  p.alpha = alpha;
  p.log_likelihood.resize(kNumClasses, d);
  const double n = static_cast<double>(labels.size());
  for (int c = 0; c < kNumClasses; ++c) {
    auto nc = class_n[static_cast<std::size_t>(c)];
    p.log_prior[static_cast<std::size_t>(c)] =
        nc ? std::log(static_cast<double>(nc) / n) : -std::numeric_limits<double>::infinity();
    double total = counts.row(c).sum() + alpha * static_cast<double>(d);
    for (Eigen::Index j = 0; j < d; ++j) p.log_likelihood(c, j) = std::log((counts(c, j) + alpha) / total);
  }
  return {BaselineKind::naive_bayes, features, static_cast<std::size_t>(d), std::move(p)};
}

double gini(std::span<const std::size_t> counts) {
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  if (n == 0.0) return 0.0;
  double s = 1.0;
  for (auto c : counts) s -= (static_cast<double>(c) / n) * (static_cast<double>(c) / n);
  return s;
}

std::size_t DecisionTreeParams::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<int, std::size_t>> stack;
  if (!nodes.empty()) stack.emplace_back(0, 0);
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

namespace {

using ColMatrix = Eigen::SparseMatrix<float, Eigen::ColMajor, std::int64_t>;

struct TreeBuilder {
  const ColMatrix& cols;
  std::span<const int> labels;
  std::size_t max_depth;
  std::size_t min_leaf;
  std::vector<TreeNode> nodes;
  std::vector<double> value_of;  // scratch, per sample

  std::array<std::size_t, kNumClasses> histogram(std::span<const std::size_t> samples) const {
    std::array<std::size_t, kNumClasses> h{};
    for (auto s : samples) ++h[static_cast<std::size_t>(labels[s])];
    return h;
  }

  int build(std::vector<std::size_t> samples, std::size_t depth) {
    TreeNode node;
    node.counts = histogram(samples);
    node.label = argmax_lowest(node.counts);
    int index = static_cast<int>(nodes.size());
    nodes.push_back(node);

    const double parent = gini(node.counts);
    if (depth >= max_depth || parent == 0.0 || samples.size() < 2 * min_leaf) return index;

    const double n = static_cast<double>(samples.size());
    double best_impurity = parent;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> column(samples.size());
    for (std::int64_t f = 0; f < cols.cols(); ++f) {
      for (auto s : samples) value_of[s] = 0.0;
      for (ColMatrix::InnerIterator it(cols, f); it; ++it) value_of[static_cast<std::size_t>(it.row())] = it.value();
      for (std::size_t k = 0; k < samples.size(); ++k) column[k] = {value_of[samples[k]], labels[samples[k]]};
      std::sort(column.begin(), column.end());
      std::array<std::size_t, kNumClasses> left{};
      std::array<std::size_t, kNumClasses> right = node.counts;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        ++left[static_cast<std::size_t>(column[k].second)];
        --right[static_cast<std::size_t>(column[k].second)];
        if (column[k].first == column[k + 1].first) continue;
        std::size_t nl = k + 1, nr = column.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        double impurity = (static_cast<double>(nl) * gini(left) + static_cast<double>(nr) * gini(right)) / n;
        if (impurity < best_impurity - 1e-12) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (column[k].first + column[k + 1].first);
        }
      }
    }
    if (best_feature < 0) return index;

    for (auto s : samples) value_of[s] = 0.0;
    for (ColMatrix::InnerIterator it(cols, best_feature); it; ++it) {
      value_of[static_cast<std::size_t>(it.row())] = it.value();
    }
    std::vector<std::size_t> left_samples, right_samples;
    for (auto s : samples) (value_of[s] <= best_threshold ? left_samples : right_samples).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    int l = build(std::move(left_samples), depth + 1);
    int r = build(std::move(right_samples), depth + 1);
    auto& me = nodes[static_cast<std::size_t>(index)];
    me.feature = best_feature;
    me.threshold = best_threshold;
    me.left = l;
    me.right = r;
    return index;
  }
};

}  // namespace

BaselineModel fit_decision_tree(const SparseRowMatrix& x, std::span<const int> labels, std::size_t max_depth,
                                std::size_t min_leaf, BaselineFeatures features) {
  check_inputs(x, labels);
  if (min_leaf == 0) throw DomainError("decision tree min_leaf must be >= 1");
  ColMatrix cols = x;
  TreeBuilder builder{cols, labels, max_depth, min_leaf, {}, std::vector<double>(labels.size(), 0.0)};
  std::vector<std::size_t> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  builder.build(std::move(all), 0);
  DecisionTreeParams p;
  p.max_depth = max_depth;
  p.min_leaf = min_leaf;
  p.nodes = std::move(builder.nodes);
  return {BaselineKind::decision_tree, features, static_cast<std::size_t>(x.cols()), std::move(p)};
}

BaselineModel fit_mlp(const SparseRowMatrix& x, std::span<const int> labels, const EvverConfig& config,
                      BaselineFeatures features) {
  check_inputs(x, labels);
  EvverConfig c = config;
  c.input_dim = static_cast<std::size_t>(x.cols());
  c.use_dcs = false;
  auto data = TrainingSet::from_sparse(x, std::vector<int>(labels.begin(), labels.end()));
  return {BaselineKind::mlp, features, c.input_dim, train(data, c)};
}

std::vector<std::array<double, kNumClasses>> BaselineModel::decision_scores(const SparseRowMatrix& x) const {
  check_dim(*this, x);
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::array<double, kNumClasses>> out(n);
  if (const auto* lr = std::get_if<LogRegParams>(&params)) {
    auto z = logits(*lr, x);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < kNumClasses; ++c) out[i][static_cast<std::size_t>(c)] = z(static_cast<Eigen::Index>(i), c);
    }
  } else if (const auto* nb = std::get_if<NaiveBayesParams>(&params)) {
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < kNumClasses; ++c) {
        double s = nb->log_prior[static_cast<std::size_t>(c)];
        for (SparseRowMatrix::InnerIterator it(x, static_cast<std::int64_t>(i)); it; ++it) {
          s += static_cast<double>(it.value()) * nb->log_likelihood(c, static_cast<Eigen::Index>(it.col()));
        }
        out[i][static_cast<std::size_t>(c)] = s;
      }
    }
  } else if (const auto* tree = std::get_if<DecisionTreeParams>(&params)) {
    for (std::size_t i = 0; i < n; ++i) {
      const TreeNode* node = &tree->nodes.front();
      while (node->feature >= 0) {
        double v = x.coeff(static_cast<std::int64_t>(i), node->feature);
        node = &tree->nodes[static_cast<std::size_t>(v <= node->threshold ? node->left : node->right)];
      }
      double total = 0.0;
      for (auto c : node->counts) total += static_cast<double>(c);
      for (std::size_t c = 0; c < kNumClasses; ++c) out[i][c] = static_cast<double>(node->counts[c]) / total;
    }
  } else {
    const auto& model = std::get<EvverModel>(params);
    std::vector<int> dummy(n, 0);
    auto data = TrainingSet::from_sparse(x, dummy);
    out = predict_proba(model, data);
  }
  return out;
}

std::vector<int> BaselineModel::predict(const SparseRowMatrix& x) const {
  auto scores = decision_scores(x);
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = argmax_lowest(scores[i]);
  return out;
}

ClassificationReport evaluate_baseline(const BaselineModel& model, const SparseRowMatrix& x,
                                       std::span<const int> labels) {
  return classification_report(labels, model.predict(x));
}

}  // namespace evver
