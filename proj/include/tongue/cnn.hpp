#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tongue/core.hpp"
#include "tongue/mlp.hpp"

namespace tongue {

enum class LayerKind { conv, sigmoid, maxpool, dense, softmax };

std::string_view to_string(LayerKind kind) noexcept;
LayerKind parse_layer_kind(std::string_view text);

/// One entry of a network description. Input sizes (conv in_channels, dense
/// in_features) may be left at 0 and are then inferred from the preceding
/// layer; when given they must match.
struct LayerSpec {
  LayerKind kind = LayerKind::sigmoid;
  int kernel_h = 0, kernel_w = 0;
  int in_channels = 0, out_channels = 0;
  int stride = 1;
  int in_features = 0, out_features = 0;

  static LayerSpec conv(int kernel, int out_channels, int stride = 1) {
    return {LayerKind::conv, kernel, kernel, 0, out_channels, stride, 0, 0};
  }
  static LayerSpec sigmoid() { return {LayerKind::sigmoid}; }
  static LayerSpec maxpool() { return {LayerKind::maxpool}; }
  static LayerSpec dense(int out_features) {
    return {LayerKind::dense, 0, 0, 0, 0, 1, 0, out_features};
  }
  static LayerSpec softmax() { return {LayerKind::softmax}; }

  bool operator==(const LayerSpec&) const = default;
};

/// Channels x height x width; dense activations are (n, 1, 1).
struct Shape3 {
  int c = 0, h = 0, w = 0;
  std::size_t size() const noexcept { return static_cast<std::size_t>(c) * h * w; }
  bool operator==(const Shape3&) const = default;
};

struct CnnLayer {
  LayerSpec spec;
  Shape3 in, out;
  std::vector<double> weights;  // conv: out x in x kh x kw; dense: out x in
  std::vector<double> bias;
  bool operator==(const CnnLayer&) const = default;
};

struct CnnModel {
  Shape3 input{3, 32, 32};
  std::vector<CnnLayer> layers;
  std::vector<int> taps;  // layer indices whose outputs are exposed
  std::uint64_t seed = 0;

  std::size_t parameter_count() const noexcept;
  std::vector<LayerSpec> spec() const;
  bool operator==(const CnnModel&) const = default;
};

/// conv 3x3x8, sigmoid, pool, conv 3x3x16, sigmoid, pool, dense 32, sigmoid,
/// dense 2, softmax.
std::vector<LayerSpec> default_cnn_spec();
/// Pool outputs of both conv blocks and the hidden dense activation.
std::vector<int> default_cnn_taps();

/// Resolves shapes and draws Xavier-uniform weights (zero biases). Any
/// inconsistency (non-positive output size, softmax not last or not over 2
/// units, unknown tap index) raises ShapeError here, never during training.
CnnModel cnn_init(const std::vector<LayerSpec>& spec, std::uint64_t seed, Shape3 input = {3, 32, 32},
                  std::vector<int> taps = default_cnn_taps());

/// HWC image -> CHW activation buffer.
std::vector<double> to_chw(const ImageTensor& image);

struct CnnOutput {
  std::array<double, 2> probabilities{0.5, 0.5};
  std::vector<std::vector<double>> taps;  // flattened CHW, one per tap index
};

CnnOutput cnn_forward(const CnnModel& model, const ImageTensor& image);
CnnOutput cnn_forward_chw(const CnnModel& model, std::span<const double> input);

/// Cross-entropy of the softmax output against `label` (0/1).
double cnn_loss(const CnnModel& model, std::span<const double> input, int label);

struct CnnGradient {
  std::vector<std::vector<double>> weights, bias;
  explicit CnnGradient(const CnnModel& model);
};

/// Adds d loss / d theta for one sample and returns the loss.
double cnn_backprop(const CnnModel& model, std::span<const double> input, int label, CnnGradient& grad);

void cnn_apply(CnnModel& model, const CnnGradient& grad, double scale);

struct CnnSample {
  std::vector<double> input;  // CHW
  int label = 0;
};

struct CnnTrainResult {
  CnnModel model;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;  // mean mini-batch loss seen during each epoch
};

double cnn_mean_loss(const CnnModel& model, std::span<const CnnSample> data);
CnnTrainResult cnn_train_with_history(std::span<const CnnSample> data, const std::vector<LayerSpec>& spec,
                                      const TrainConfig& cfg, Shape3 input = {3, 32, 32},
                                      std::vector<int> taps = default_cnn_taps());
CnnModel cnn_train(std::span<const CnnSample> data, const std::vector<LayerSpec>& spec,
                   const TrainConfig& cfg, Shape3 input = {3, 32, 32},
                   std::vector<int> taps = default_cnn_taps());

/// argmax of the class probabilities; ties go to class 1 (patient).
Label cnn_predict(const CnnModel& model, const ImageTensor& image);
Label cnn_predict_chw(const CnnModel& model, std::span<const double> input);

}  // namespace tongue
