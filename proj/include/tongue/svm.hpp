#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tongue/core.hpp"

namespace tongue {

enum class KernelType { linear, rbf };

struct Kernel {
  KernelType type = KernelType::linear;
  double gamma = 0.0;  // rbf only; must be > 0 once resolved

  double operator()(std::span<const double> a, std::span<const double> b) const noexcept;
};

struct SvmParams {
  double c = 1.0;
  Kernel kernel{};
  double tol = 1e-3;
  std::size_t max_iterations = 1'000'000;
  /// rbf gamma <= 0 resolves to 1 / dimension at training time
};

/// Decision function  f(x) = sum_i coef_i K(sv_i, x) + bias,  coef_i = y_i alpha_i.
struct SvmModel {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> coef;
  std::vector<std::size_t> support_indices;  // rows of the training set; not persisted
  double bias = 0.0;
  Kernel kernel{};
  double c = 1.0;
  std::size_t iterations = 0;

  std::size_t dimension() const noexcept { return support_vectors.empty() ? 0 : support_vectors.front().size(); }
};

struct SvmPrediction {
  int label = 1;  // +1 patient, -1 healthy
  double decision = 0.0;
};

/// Sequential Minimal Optimization on the dual with maximal-violating-pair
/// working-set selection (second-order choice of the partner). Stops once
/// the KKT gap max_{I_up}(-y G) - min_{I_low}(-y G) drops below `tol`.
SvmModel svm_train(std::span<const std::vector<double>> xs, std::span<const int> ys, const SvmParams& params);

/// label = sign(decision), with decision == 0 mapped to +1.
SvmPrediction svm_predict(const SvmModel& model, std::span<const double> x);

}  // namespace tongue
