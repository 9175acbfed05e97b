#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evver/mlp.hpp"
#include "evver/types.hpp"

namespace evver {

/// Arithmetic used by the training loop. Inference and stored parameters
/// are always double; f32 training keeps a float working copy.
enum class Precision { f32, f64 };

Precision precision_from_name(std::string_view name);
std::string_view precision_name(Precision p) noexcept;

struct EvverConfig {
  std::size_t input_dim = 0;  // d, excluding the DCS scalar
  std::vector<std::size_t> hidden_dims{512};
  bool use_dcs = false;
  double dropout = 0.1;
  double l2 = 0.0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 20;
  std::uint64_t seed = 42;
  Precision precision = Precision::f32;

  /// Throws DomainError on: input_dim 0, empty or zero hidden_dims, dropout
  /// outside [0,1), negative l2, learning_rate <= 0 (unless `allow_zero_lr`),
  /// batch_size 0.
  void validate(bool allow_zero_lr = false) const;

  /// d + 1 when the DCS scalar is appended, else d.
  std::size_t model_input_dim() const { return input_dim + (use_dcs ? 1 : 0); }

  /// Number of weights and biases.
  std::size_t parameter_count() const;
};

void to_json(nlohmann::json& j, const EvverConfig& c);
void from_json(const nlohmann::json& j, EvverConfig& c);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> validation_accuracy;
};

void to_json(nlohmann::json& j, const EpochMetrics& m);
void from_json(const nlohmann::json& j, EpochMetrics& m);

class EvverModel {
 public:
  EvverConfig config;
  mlp::Params<double> params;
  std::vector<EpochMetrics> training_metrics;
  std::optional<std::size_t> best_epoch;

  /// Random initialization: weights ~ N(0, 2 / fan_in), biases zero.
  static EvverModel initialize(const EvverConfig& config);

  /// All-zero parameters with the shapes implied by `config`.
  static EvverModel zeros(const EvverConfig& config);

  /// Throws DataError when the layer shapes do not chain from
  /// config.model_input_dim() through hidden_dims to 3 outputs.
  void check_shapes() const;

  /// Class probabilities for one item. `dcs` must be present iff
  /// config.use_dcs and lie in [0,1]; `features` must have input_dim entries.
  std::array<double, kNumClasses> forward(std::span<const float> features,
                                          std::optional<double> dcs = std::nullopt) const;
  std::array<double, kNumClasses> forward(std::span<const double> features,
                                          std::optional<double> dcs = std::nullopt) const;

  /// Probabilities for a prepared batch (model_input_dim x n, one column per
  /// sample), 3 x n.
  mlp::Mat<double> forward_batch(const mlp::Mat<double>& inputs) const;
};

/// Model file: "EVNM", version u32, payload length u64, SHA-256 of the
/// payload (32 bytes), then the payload: JSON header length u32, JSON header
/// (config, training metrics, best epoch), layer count u32, and per layer
/// rows u32, cols u32, weights (row-major f64), bias (f64), little-endian.
inline constexpr std::uint32_t kModelVersion = 1;

void save_model(const EvverModel& model, const std::string& path);

/// Throws DataError on bad magic, version mismatch, truncation or checksum
/// failure.
EvverModel load_model(const std::string& path);

}  // namespace evver
