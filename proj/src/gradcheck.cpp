#include "tongue/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tongue {

double grad_check(std::span<const double> params,
                  const std::function<double(std::span<const double>)>& loss,
                  std::span<const double> analytic, double step, std::uint64_t seed,
                  std::size_t n_checked) {
  if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
  if (analytic.size() != params.size()) throw ShapeError("gradient and parameter sizes differ");
  if (params.empty()) return 0.0;

  std::vector<std::size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t n = std::min(params.size(), std::max(n_checked, kMinCheckedParameters));
  Rng rng(seed);
  // partial Fisher-Yates: the first n entries become a uniform sample
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);

  std::vector<double> theta(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = idx[i];
    const double saved = theta[k];
    theta[k] = saved + step;
    const double up = loss(theta);
    theta[k] = saved - step;
    const double down = loss(theta);
    theta[k] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double bp = analytic[k];
    worst = std::max(worst, std::abs(bp - fd) / std::max(std::abs(bp) + std::abs(fd), 1e-8));
  }
  return worst;
}

std::vector<double> flatten_parameters(const MlpModel& m) {
  std::vector<double> p;
  p.reserve(m.parameter_count());
  p.insert(p.end(), m.w1.begin(), m.w1.end());
  p.insert(p.end(), m.b1.begin(), m.b1.end());
  p.insert(p.end(), m.w2.begin(), m.w2.end());
  p.push_back(m.b2);
  return p;
}

MlpModel with_parameters(const MlpModel& m, std::span<const double> p) {
  if (p.size() != m.parameter_count()) throw ShapeError("parameter vector does not match the model");
  MlpModel r = m;
  auto it = p.begin();
  std::copy_n(it, r.w1.size(), r.w1.begin());
  it += static_cast<std::ptrdiff_t>(r.w1.size());
  std::copy_n(it, r.b1.size(), r.b1.begin());
  it += static_cast<std::ptrdiff_t>(r.b1.size());
  std::copy_n(it, r.w2.size(), r.w2.begin());
  it += static_cast<std::ptrdiff_t>(r.w2.size());
  r.b2 = *it;
  return r;
}

std::vector<double> flatten_gradient(const MlpGradient& g) {
  std::vector<double> p;
  p.insert(p.end(), g.w1.begin(), g.w1.end());
  p.insert(p.end(), g.b1.begin(), g.b1.end());
  p.insert(p.end(), g.w2.begin(), g.w2.end());
  p.push_back(g.b2);
  return p;
}

std::vector<double> flatten_parameters(const CnnModel& m) {
  std::vector<double> p;
  p.reserve(m.parameter_count());
  for (const auto& L : m.layers) {
    p.insert(p.end(), L.weights.begin(), L.weights.end());
    p.insert(p.end(), L.bias.begin(), L.bias.end());
  }
  return p;
}

CnnModel with_parameters(const CnnModel& m, std::span<const double> p) {
  if (p.size() != m.parameter_count()) throw ShapeError("parameter vector does not match the model");
  CnnModel r = m;
  auto it = p.begin();
  for (auto& L : r.layers) {
    std::copy_n(it, L.weights.size(), L.weights.begin());
    it += static_cast<std::ptrdiff_t>(L.weights.size());
    std::copy_n(it, L.bias.size(), L.bias.begin());
    it += static_cast<std::ptrdiff_t>(L.bias.size());
  }
  return r;
}

std::vector<double> flatten_gradient(const CnnGradient& g) {
  std::vector<double> p;
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    p.insert(p.end(), g.weights[i].begin(), g.weights[i].end());
    p.insert(p.end(), g.bias[i].begin(), g.bias[i].end());
  }
  return p;
}

double grad_check(const MlpModel& model, std::span<const double> x, int label, double step,
                  std::uint64_t seed, std::size_t n_checked) {
  MlpGradient g(model);
  mlp_backprop(model, x, label, g);
  const auto analytic = flatten_gradient(g);
  const auto params = flatten_parameters(model);
  auto loss = [&](std::span<const double> theta) {
    return mlp_loss(mlp_forward(with_parameters(model, theta), x).out, label);
  };
  return grad_check(params, loss, analytic, step, seed, n_checked);
}

double grad_check(const CnnModel& model, std::span<const double> input, int label, double step,
                  std::uint64_t seed, std::size_t n_checked) {
  CnnGradient g(model);
  cnn_backprop(model, input, label, g);
  const auto analytic = flatten_gradient(g);
  const auto params = flatten_parameters(model);
  auto loss = [&](std::span<const double> theta) {
    return cnn_loss(with_parameters(model, theta), input, label);
  };
  return grad_check(params, loss, analytic, step, seed, n_checked);
}

}  // namespace tongue
