#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpool/autodiff.hpp"
#include "qpool/circuits.hpp"
#include "qpool/data.hpp"

namespace qpool::nn {

inline constexpr int kFeatureMaps = 4;
inline constexpr int kClasses = 2;

/// Feature maps stored map-major: value(m, i, j) = data[(m * rows + i) * cols + j].
struct FeatureMaps {
  int maps = kFeatureMaps;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
};

// ---------------------------------------------------------------------------
// Layers

struct QuantumConvLayer {
  circuits::Ansatz ansatz;
  /// One kernel for ConvNoPool (its four readouts form the maps), four
  /// independent kernels for the pooling families.
  std::vector<std::vector<double>> kernels;
  int stride = 2;

  explicit QuantumConvLayer(circuits::Ansatz a, int stride = 2);
  static int kernel_count(const circuits::Ansatz& a);
};

struct ClassicalConvLayer {
  /// filters[m] is the row-major 2x2 kernel of map m.
  std::array<std::array<double, 4>, kFeatureMaps> filters{};
  std::array<double, kFeatureMaps> bias{};
  int stride = 2;
  bool relu = false;

  static constexpr int kParameterCount = kFeatureMaps * (4 + 1);
};

struct DenseLayer {
  int inputs = 0;
  std::vector<double> weights;  // kClasses x inputs, row-major
  std::array<double, kClasses> bias{};
};

/// Runs every kernel over every valid 2x2 window. Fills `ctx` (when given)
/// with what the backward pass needs.
FeatureMaps quantum_conv_forward(std::span<const double> image, int height, int width,
                                 const QuantumConvLayer& layer,
                                 autodiff::QuantumLayerContext* ctx = nullptr);

FeatureMaps classical_conv_forward(std::span<const double> image, int height, int width,
                                   const ClassicalConvLayer& layer);

std::array<double, kClasses> dense_forward(std::span<const double> features, const DenseLayer& head);

struct LossResult {
  double loss = 0.0;
  std::array<double, kClasses> grad{};
};

/// -log softmax(logits)[label] and its gradient softmax - onehot.
LossResult softmax_cross_entropy(std::span<const double> logits, int label);

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(AdamConfig c, std::size_t n) : config(c), m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// ---------------------------------------------------------------------------
// Model

struct ModelConfig {
  /// An ansatz key, or "classical" for the CNN baseline.
  std::string front = "conv";
  int height = 28;
  int width = 28;
  int stride = 2;
  /// ReLU after the classical convolution only.
  bool relu = false;
};

struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

class HybridModel {
 public:
  explicit HybridModel(ModelConfig config);

  /// Quantum angles U[-pi, pi], classical weights Glorot-uniform, biases 0.
  void initialize(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  bool is_quantum() const { return quantum_.has_value(); }
  const circuits::Ansatz* ansatz() const { return quantum_ ? &quantum_->ansatz : nullptr; }
  int feature_count() const { return head_.inputs; }
  int map_rows() const { return rows_; }
  int map_cols() const { return cols_; }

  const QuantumConvLayer* quantum_layer() const { return quantum_ ? &*quantum_ : nullptr; }
  const ClassicalConvLayer& classical_layer() const { return classical_; }
  const DenseLayer& head() const { return head_; }

  /// Flat parameter vector laid out as groups() describes.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);
  const std::vector<ParamGroup>& groups() const { return groups_; }

  FeatureMaps features(std::span<const double> image) const;
  std::array<double, kClasses> logits(std::span<const double> image) const;

  /// Adds d loss / d params of one example into `grad` and returns the loss.
  double accumulate_gradient(std::span<const double> image, int label, std::span<double> grad) const;

 private:
  void check_image(std::span<const double> image) const;

  ModelConfig config_;
  int rows_ = 0;
  int cols_ = 0;
  std::optional<QuantumConvLayer> quantum_;
  ClassicalConvLayer classical_;
  DenseLayer head_;
  std::vector<ParamGroup> groups_;
};

// ---------------------------------------------------------------------------
// Training

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

Evaluation evaluate(const HybridModel& model, const data::Dataset& ds);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_acc = 0.0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  double max_train_acc = 0.0;
  double max_val_acc = 0.0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch Adam on the mean batch loss. Shuffling is seeded from
/// config.seed; metrics are full passes over both splits after each epoch.
RunMetrics fit(HybridModel& model, const data::Dataset& train, const data::Dataset& val,
               const TrainConfig& config, const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Checkpoints: line-oriented text, see README for the layout.

void save_checkpoint(const HybridModel& model, const std::filesystem::path& path);
HybridModel load_checkpoint(const std::filesystem::path& path);

}  // namespace qpool::nn
