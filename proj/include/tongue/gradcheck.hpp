#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tongue/cnn.hpp"
#include "tongue/mlp.hpp"

namespace tongue {

inline constexpr std::size_t kMinCheckedParameters = 20;

/// Compares an analytic gradient with central differences
/// (f(theta + h e_k) - f(theta - h e_k)) / 2h on a seeded random subset of
/// at least 20 coordinates (all of them when fewer exist). Returns
/// max |g_bp - g_fd| / max(|g_bp| + |g_fd|, 1e-8).
double grad_check(std::span<const double> params,
                  const std::function<double(std::span<const double>)>& loss,
                  std::span<const double> analytic, double step, std::uint64_t seed,
                  std::size_t n_checked = 32);

std::vector<double> flatten_parameters(const MlpModel& model);
MlpModel with_parameters(const MlpModel& model, std::span<const double> params);
std::vector<double> flatten_gradient(const MlpGradient& grad);

std::vector<double> flatten_parameters(const CnnModel& model);
CnnModel with_parameters(const CnnModel& model, std::span<const double> params);
std::vector<double> flatten_gradient(const CnnGradient& grad);

double grad_check(const MlpModel& model, std::span<const double> x, int label, double step,
                  std::uint64_t seed, std::size_t n_checked = 32);
double grad_check(const CnnModel& model, std::span<const double> input, int label, double step,
                  std::uint64_t seed, std::size_t n_checked = 32);

}  // namespace tongue
