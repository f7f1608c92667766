#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tongue/core.hpp"

namespace tongue {

inline constexpr int kExtractorInputs = 1024;
inline constexpr int kExtractorHidden = 31;

/// Hyper-parameters for plain mini-batch gradient descent.
struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 31 hidden activations of an extractor network; each entry lies in (0,1).
struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const FeatureVector&) const = default;
};

/// Two-layer sigmoid network  input -> hidden -> 1.
struct MlpModel {
  int input_dim = kExtractorInputs;
  int hidden_dim = kExtractorHidden;
  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // 1 x hidden_dim
  double b2 = 0.0;

  std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + 1; }
  bool operator==(const MlpModel&) const = default;
};

struct MlpSample {
  std::vector<double> x;
  int label = 0;  // 0 = healthy, 1 = patient
};

struct MlpOutput {
  FeatureVector hidden;
  double out = 0.5;
};

double sigmoid(double z) noexcept;

/// Xavier-uniform weights in +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
MlpModel mlp_init(std::uint64_t seed, int input_dim = kExtractorInputs,
                  int hidden_dim = kExtractorHidden);

MlpOutput mlp_forward(const MlpModel& model, std::span<const double> x);

/// Binary cross-entropy; `out` is clamped to [1e-12, 1 - 1e-12] before the log.
double mlp_loss(double out, int label);

FeatureVector mlp_extract(const MlpModel& model, std::span<const double> x);

/// Parameter-shaped gradient accumulator.
struct MlpGradient {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;

  explicit MlpGradient(const MlpModel& model);
};

/// Adds d loss / d theta for one sample into `grad` and returns the loss.
double mlp_backprop(const MlpModel& model, std::span<const double> x, int label, MlpGradient& grad);

double mlp_mean_loss(const MlpModel& model, std::span<const MlpSample> data);

/// Applies theta -= scale * grad.
void mlp_apply(MlpModel& model, const MlpGradient& grad, double scale);

struct MlpTrainResult {
  MlpModel model;
  double initial_loss = 0.0;         // full-data mean loss before the first step
  double final_loss = 0.0;           // full-data mean loss of the returned model
  std::vector<double> epoch_losses;  // mean mini-batch loss seen during each epoch
};

/// Mini-batch gradient descent on the mean cross-entropy. Batches are drawn
/// from a per-epoch seeded shuffle, so a fixed seed gives identical weights.
MlpTrainResult mlp_train_with_history(std::span<const MlpSample> data, const TrainConfig& cfg);
MlpModel mlp_train(std::span<const MlpSample> data, const TrainConfig& cfg);

}  // namespace tongue
