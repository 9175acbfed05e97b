#include "evver/evvernet.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/rng.hpp"

namespace evver {

Precision precision_from_name(std::string_view name) {
  if (name == "f32" || name == "float32") return Precision::f32;
  if (name == "f64" || name == "float64") return Precision::f64;
  throw DomainError("unknown precision: " + std::string(name));
}

std::string_view precision_name(Precision p) noexcept { return p == Precision::f64 ? "f64" : "f32"; }

void EvverConfig::validate(bool allow_zero_lr) const {
  if (input_dim == 0) throw DomainError("config: input_dim must be positive");
  if (hidden_dims.empty()) throw DomainError("config: hidden_dims must be non-empty");
  for (auto h : hidden_dims) {
    if (h == 0) throw DomainError("config: hidden dimension 0");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DomainError("config: dropout must be in [0,1)");
  if (!(l2 >= 0.0)) throw DomainError("config: l2 must be >= 0");
  if (allow_zero_lr ? !(learning_rate >= 0.0) : !(learning_rate > 0.0)) {
    throw DomainError("config: learning_rate must be > 0");
  }
  if (batch_size == 0) throw DomainError("config: batch_size must be positive");
}

std::size_t EvverConfig::parameter_count() const {
  std::size_t n = 0;
  std::size_t in = model_input_dim();
  for (auto h : hidden_dims) {
    n += in * h + h;
    in = h;
  }
  return n + in * kNumClasses + kNumClasses;
}

void to_json(nlohmann::json& j, const EvverConfig& c) {
  j = nlohmann::json{{"input_dim", c.input_dim},         {"hidden_dims", c.hidden_dims},
                     {"use_dcs", c.use_dcs},             {"dropout", c.dropout},
                     {"l2", c.l2},                       {"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},       {"max_epochs", c.max_epochs},
                     {"seed", c.seed},                   {"precision", precision_name(c.precision)}};
}

void from_json(const nlohmann::json& j, EvverConfig& c) {
  EvverConfig d;
  c.input_dim = j.value("input_dim", d.input_dim);
  c.hidden_dims = j.value("hidden_dims", d.hidden_dims);
  c.use_dcs = j.value("use_dcs", d.use_dcs);
  c.dropout = j.value("dropout", d.dropout);
  c.l2 = j.value("l2", d.l2);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.seed = j.value("seed", d.seed);
  c.precision = precision_from_name(j.value("precision", std::string("f32")));
}

void to_json(nlohmann::json& j, const EpochMetrics& m) {
  j = nlohmann::json{{"epoch", m.epoch}, {"loss", m.loss}, {"train_accuracy", m.train_accuracy}};
  if (m.validation_accuracy) j["validation_accuracy"] = *m.validation_accuracy;
}

void from_json(const nlohmann::json& j, EpochMetrics& m) {
  m.epoch = j.at("epoch").get<std::size_t>();
  m.loss = j.at("loss").get<double>();
  m.train_accuracy = j.at("train_accuracy").get<double>();
  if (j.contains("validation_accuracy")) m.validation_accuracy = j["validation_accuracy"].get<double>();
}

namespace {

std::vector<std::size_t> layer_sizes(const EvverConfig& c) {
  std::vector<std::size_t> sizes{c.model_input_dim()};
  sizes.insert(sizes.end(), c.hidden_dims.begin(), c.hidden_dims.end());
  sizes.push_back(kNumClasses);
  return sizes;
}

}  // namespace

EvverModel EvverModel::zeros(const EvverConfig& config) {
  EvverModel m;
  m.config = config;
  auto sizes = layer_sizes(config);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    auto in = static_cast<Eigen::Index>(sizes[l]);
    m.params.layers.push_back({mlp::Mat<double>::Zero(out, in), mlp::Vec<double>::Zero(out)});
  }
  return m;
}

EvverModel EvverModel::initialize(const EvverConfig& config) {
  EvverModel m = zeros(config);
  Rng rng = Rng::fork(config.seed, "evvernet/init");
  for (auto& layer : m.params.layers) {
    double scale = std::sqrt(2.0 / static_cast<double>(layer.weight.cols()));
    for (Eigen::Index k = 0; k < layer.weight.size(); ++k) {
      double w = scale * rng.normal();
      // f32 training starts from float-representable values so that a
      // zero-step run returns the initial parameters exactly
      layer.weight.data()[k] = config.precision == Precision::f32 ? static_cast<double>(static_cast<float>(w)) : w;
    }
  }
  return m;
}

void EvverModel::check_shapes() const {
  auto sizes = layer_sizes(config);
  if (params.layers.size() + 1 != sizes.size()) {
    throw DataError("model has " + std::to_string(params.layers.size()) + " layers, config implies " +
                    std::to_string(sizes.size() - 1));
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    if (static_cast<std::size_t>(layer.weight.cols()) != sizes[l] ||
        static_cast<std::size_t>(layer.weight.rows()) != sizes[l + 1] ||
        layer.bias.size() != layer.weight.rows()) {
      throw DataError("layer " + std::to_string(l) + " shape " + std::to_string(layer.weight.rows()) + "x" +
                      std::to_string(layer.weight.cols()) + " does not match expected " +
                      std::to_string(sizes[l + 1]) + "x" + std::to_string(sizes[l]));
    }
  }
}

namespace {

template <class T>
std::array<double, kNumClasses> forward_one(const EvverModel& m, std::span<const T> features,
                                            std::optional<double> dcs) {
  const auto& c = m.config;
  if (features.size() != c.input_dim) {
    throw DataError("dimension mismatch: features have " + std::to_string(features.size()) +
                    " entries, model expects " + std::to_string(c.input_dim));
  }
  if (c.use_dcs != dcs.has_value()) {
    throw DataError(c.use_dcs ? "dimension mismatch: model expects a DCS scalar (input dim " +
                                    std::to_string(c.model_input_dim()) + ") but none was given"
                              : "dimension mismatch: model was trained without DCS (input dim " +
                                    std::to_string(c.model_input_dim()) + ") but a DCS scalar was given");
  }
  if (dcs && !(*dcs >= 0.0 && *dcs <= 1.0)) throw DomainError("DCS scalar outside [0,1]");
  mlp::Mat<double> x(static_cast<Eigen::Index>(c.model_input_dim()), 1);
  for (std::size_t i = 0; i < features.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(features[i]);
  if (dcs) x(static_cast<Eigen::Index>(c.input_dim), 0) = *dcs;
  auto p = mlp::forward(m.params, x);
  return {p(0, 0), p(1, 0), p(2, 0)};
}

}  // namespace

std::array<double, kNumClasses> EvverModel::forward(std::span<const float> features, std::optional<double> dcs) const {
  return forward_one(*this, features, dcs);
}

std::array<double, kNumClasses> EvverModel::forward(std::span<const double> features,
                                                    std::optional<double> dcs) const {
  return forward_one(*this, features, dcs);
}

mlp::Mat<double> EvverModel::forward_batch(const mlp::Mat<double>& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != config.model_input_dim()) {
    throw DataError("dimension mismatch: batch has " + std::to_string(inputs.rows()) + " input rows, model expects " +
                    std::to_string(config.model_input_dim()));
  }
  return mlp::forward(params, inputs);
}

}  // namespace evver
