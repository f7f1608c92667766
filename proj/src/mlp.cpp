#include "tongue/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tongue {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be positive");
  if (epochs <= 0) throw ValidationError("epochs must be positive");
  if (batch_size <= 0) throw ValidationError("batch_size must be positive");
}

double sigmoid(double z) noexcept {
  // kept strictly inside (0,1) even where the exact value rounds to 0 or 1
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double s;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  return std::clamp(s, lo, hi);
}

MlpModel mlp_init(std::uint64_t seed, int input_dim, int hidden_dim) {
  if (input_dim <= 0 || hidden_dim <= 0) throw ShapeError("mlp dimensions must be positive");
  MlpModel m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  Rng rng(Rng::derive(seed, 0x6d6c70));
  const double bound1 = std::sqrt(6.0 / (input_dim + hidden_dim));
  const double bound2 = std::sqrt(6.0 / (hidden_dim + 1));
  m.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
  for (double& w : m.w1) w = rng.uniform(-bound1, bound1);
  m.b1.assign(hidden_dim, 0.0);
  m.w2.resize(hidden_dim);
  for (double& w : m.w2) w = rng.uniform(-bound2, bound2);
  m.b2 = 0.0;
  return m;
}

namespace {

void check_input(const MlpModel& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.input_dim)
    throw ShapeError("mlp input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(m.input_dim));
}

}  // namespace

MlpOutput mlp_forward(const MlpModel& m, std::span<const double> x) {
  check_input(m, x);
  MlpOutput o;
  o.hidden.values.resize(m.hidden_dim);
  double z2 = m.b2;
  for (int j = 0; j < m.hidden_dim; ++j) {
    const double* row = m.w1.data() + static_cast<std::size_t>(j) * m.input_dim;
    const double z = std::inner_product(x.begin(), x.end(), row, m.b1[j]);
    o.hidden.values[j] = sigmoid(z);
    z2 += m.w2[j] * o.hidden.values[j];
  }
  o.out = sigmoid(z2);
  return o;
}

double mlp_loss(double out, int label) {
  if (label != 0 && label != 1) throw ValidationError("extractor labels must be 0 or 1");
  constexpr double eps = 1e-12;
  const double p = std::clamp(out, eps, 1.0 - eps);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

FeatureVector mlp_extract(const MlpModel& model, std::span<const double> x) {
  return mlp_forward(model, x).hidden;
}

MlpGradient::MlpGradient(const MlpModel& m)
    : w1(m.w1.size(), 0.0), b1(m.b1.size(), 0.0), w2(m.w2.size(), 0.0) {}

double mlp_backprop(const MlpModel& m, std::span<const double> x, int label, MlpGradient& g) {
  const MlpOutput o = mlp_forward(m, x);
  // d(BCE)/dz2 for a sigmoid output is (out - label)
  const double d2 = o.out - label;
  g.b2 += d2;
  for (int j = 0; j < m.hidden_dim; ++j) {
    const double h = o.hidden.values[j];
    g.w2[j] += d2 * h;
    const double d1 = d2 * m.w2[j] * h * (1.0 - h);
    g.b1[j] += d1;
    double* row = g.w1.data() + static_cast<std::size_t>(j) * m.input_dim;
    for (int i = 0; i < m.input_dim; ++i) row[i] += d1 * x[i];
  }
  return mlp_loss(o.out, label);
}

double mlp_mean_loss(const MlpModel& model, std::span<const MlpSample> data) {
  if (data.empty()) throw ValidationError("mean loss over an empty dataset");
  double sum = 0.0;
  for (const auto& s : data) sum += mlp_loss(mlp_forward(model, s.x).out, s.label);
  return sum / static_cast<double>(data.size());
}

void mlp_apply(MlpModel& m, const MlpGradient& g, double scale) {
  for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= scale * g.w1[i];
  for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= scale * g.b1[i];
  for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= scale * g.w2[i];
  m.b2 -= scale * g.b2;
}

MlpTrainResult mlp_train_with_history(std::span<const MlpSample> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ValidationError("cannot train an extractor on an empty dataset");
  const int input_dim = static_cast<int>(data.front().x.size());
  for (const auto& s : data) {
    if (static_cast<int>(s.x.size()) != input_dim) throw ShapeError("inconsistent extractor input sizes");
    if (s.label != 0 && s.label != 1) throw ValidationError("extractor labels must be 0 or 1");
  }

  MlpTrainResult result;
  result.model = mlp_init(cfg.seed, input_dim, kExtractorHidden);
  MlpModel& model = result.model;
  result.initial_loss = mlp_mean_loss(model, data);

  Rng order_rng(Rng::derive(cfg.seed, 0x6f72646572));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double seen = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      MlpGradient grad(model);
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = data[order[k]];
        seen += mlp_backprop(model, s.x, s.label, grad);
      }
      mlp_apply(model, grad, cfg.learning_rate / static_cast<double>(end - start));
    }
    result.epoch_losses.push_back(seen / static_cast<double>(data.size()));
  }
  result.final_loss = mlp_mean_loss(model, data);
  return result;
}

MlpModel mlp_train(std::span<const MlpSample> data, const TrainConfig& cfg) {
  return mlp_train_with_history(data, cfg).model;
}

}  // namespace tongue
