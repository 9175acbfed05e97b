#pragma once

// Dense GELU network kernels shared by training (float or double) and the
// gradient checker (double). Activations are column-major: one column per
// sample, so a layer is Z = W * A + b.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "evver/rng.hpp"

namespace evver::mlp {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
struct Layer {
  Mat<T> weight;  // out x in
  Vec<T> bias;    // out
};

template <class T>
struct Params {
  std::vector<Layer<T>> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols()); }
  std::size_t output_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows()); }

  template <class U>
  Params<U> cast() const {
    Params<U> out;
    for (const auto& l : layers) out.layers.push_back({l.weight.template cast<U>(), l.bias.template cast<U>()});
    return out;
  }

  T squared_weight_norm() const {
    T s = 0;
    for (const auto& l : layers) s += l.weight.squaredNorm();
    return s;
  }
};

/// Exact GELU: x * Phi(x).
template <class T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

/// d/dx GELU = Phi(x) + x * phi(x).
template <class T>
T gelu_grad(T x) {
  T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  return cdf + x * pdf;
}

/// Column-wise softmax, max-shifted.
template <class T>
void softmax_columns(Mat<T>& logits) {
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    T m = col.maxCoeff();
    col = (col.array() - m).exp();
    col /= col.sum();
  }
}

/// Probabilities (out x batch) at inference: no dropout.
template <class T>
Mat<T> forward(const Params<T>& p, const Mat<T>& input) {
  Mat<T> a = input;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    Mat<T> z = (p.layers[l].weight * a).colwise() + p.layers[l].bias;
    if (l + 1 < p.layers.size()) {
      a = z.unaryExpr([](T v) { return gelu(v); });
    } else {
      a = std::move(z);
    }
  }
  softmax_columns(a);
  return a;
}

template <class T>
struct Gradients {
  std::vector<Mat<T>> weight;
  std::vector<Vec<T>> bias;
};

/// Mean cross-entropy over the batch plus l2 * sum of squared weights
/// (biases excluded). When `dropout_rng` is non-null, inverted dropout with
/// rate `dropout` is applied to every hidden activation. Fills `grads` when
/// non-null and returns the loss. `probabilities` receives the softmax
/// output when non-null.
template <class T>
T loss_and_gradients(const Params<T>& p, const Mat<T>& input, std::span<const int> labels, T l2,
                     T dropout, Rng* dropout_rng, Gradients<T>* grads, Mat<T>* probabilities = nullptr) {
  const std::size_t depth = p.layers.size();
  const auto batch = input.cols();
  std::vector<Mat<T>> pre(depth);       // Z per layer
  std::vector<Mat<T>> act(depth + 1);   // A per layer input; act[0] = input
  std::vector<Mat<T>> masks(depth);     // dropout scale per hidden layer
  act[0] = input;
  const bool drop = dropout_rng && dropout > T(0);
  const T keep = T(1) - dropout;

  for (std::size_t l = 0; l < depth; ++l) {
    pre[l] = (p.layers[l].weight * act[l]).colwise() + p.layers[l].bias;
    if (l + 1 < depth) {
      act[l + 1] = pre[l].unaryExpr([](T v) { return gelu(v); });
      if (drop) {
        masks[l].resize(pre[l].rows(), pre[l].cols());
        for (Eigen::Index k = 0; k < masks[l].size(); ++k) {
          masks[l].data()[k] = dropout_rng->uniform01() < static_cast<double>(keep) ? T(1) / keep : T(0);
        }
        act[l + 1].array() *= masks[l].array();
      }
    } else {
      act[l + 1] = pre[l];
    }
  }
  Mat<T>& prob = act[depth];
  softmax_columns(prob);

  T loss = 0;
  for (Eigen::Index c = 0; c < batch; ++c) {
    T pc = prob(labels[static_cast<std::size_t>(c)], c);
    loss -= std::log(std::max(pc, std::numeric_limits<T>::min()));
  }
  loss /= static_cast<T>(batch);
  if (l2 > T(0)) loss += l2 * p.squared_weight_norm();

  if (grads) {
    grads->weight.resize(depth);
    grads->bias.resize(depth);
    Mat<T> delta = prob;
    for (Eigen::Index c = 0; c < batch; ++c) delta(labels[static_cast<std::size_t>(c)], c) -= T(1);
    delta /= static_cast<T>(batch);
    for (std::size_t l = depth; l-- > 0;) {
      grads->weight[l] = delta * act[l].transpose();
      if (l2 > T(0)) grads->weight[l] += T(2) * l2 * p.layers[l].weight;
      grads->bias[l] = delta.rowwise().sum();
      if (l == 0) break;
      Mat<T> back = p.layers[l].weight.transpose() * delta;
      if (drop) back.array() *= masks[l - 1].array();
      delta = back.array() * pre[l - 1].unaryExpr([](T v) { return gelu_grad(v); }).array();
    }
  }
  if (probabilities) *probabilities = std::move(prob);
  return loss;
}

}  // namespace evver::mlp
