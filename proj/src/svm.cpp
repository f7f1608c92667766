#include "tongue/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tongue {

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const noexcept {
  double s = 0.0;
  if (type == KernelType::linear) {
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::exp(-gamma * s);
}

SvmModel svm_train(std::span<const std::vector<double>> xs, std::span<const int> ys, const SvmParams& params) {
  const std::size_t n = xs.size();
  if (n == 0 || ys.size() != n) throw ShapeError("svm_train needs equally many vectors and labels");
  if (!(params.c > 0.0)) throw DomainError("SVM regularisation C must be positive");
  if (!(params.tol > 0.0)) throw DomainError("SVM tolerance must be positive");
  const std::size_t dim = xs.front().size();
  if (dim == 0) throw ShapeError("SVM feature vectors are empty");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (xs[i].size() != dim) throw ShapeError("SVM feature vectors differ in length");
    if (ys[i] == 1) pos = true;
    else if (ys[i] == -1) neg = true;
    else throw ValidationError("SVM labels must be -1 or +1");
  }
  if (!pos || !neg) throw ValidationError("SVM training data must contain both classes");

  Kernel kernel = params.kernel;
  if (kernel.type == KernelType::rbf && !(kernel.gamma > 0.0)) kernel.gamma = 1.0 / static_cast<double>(dim);

  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) K[i * n + j] = K[j * n + i] = kernel(xs[i], xs[j]);
  auto Q = [&](std::size_t i, std::size_t j) { return ys[i] * ys[j] * K[i * n + j]; };

  const double C = params.c;
  constexpr double tau = 1e-12;
  std::vector<double> alpha(n, 0.0), G(n, -1.0);
  auto in_up = [&](std::size_t t) { return (ys[t] == 1 && alpha[t] < C) || (ys[t] == -1 && alpha[t] > 0.0); };
  auto in_low = [&](std::size_t t) { return (ys[t] == 1 && alpha[t] > 0.0) || (ys[t] == -1 && alpha[t] < C); };

  std::size_t iter = 0;
  for (; iter < params.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t)
      if (in_up(t) && -ys[t] * G[t] >= gmax) {
        gmax = -ys[t] * G[t];
        i = t;
      }
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -ys[t] * G[t];
      gmin = std::min(gmin, v);
      if (i == n) continue;
      const double b = gmax - v;
      if (b > 0.0) {
        double a = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
        if (a <= 0.0) a = tau;
        if (-(b * b) / a <= best) {
          best = -(b * b) / a;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax - gmin < params.tol) break;

    const double ai = alpha[i], aj = alpha[j];
    if (ys[i] != ys[j]) {
      double quad = K[i * n + i] + K[j * n + j] + 2.0 * Q(i, j);
      if (quad <= 0.0) quad = tau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = ai - aj;
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0; alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else if (alpha[j] > C) {
        alpha[j] = C; alpha[i] = C + diff;
      }
    } else {
      double quad = K[i * n + i] + K[j * n + j] - 2.0 * Q(i, j);
      if (quad <= 0.0) quad = tau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = ai + aj;
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0; alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0; alpha[j] = sum;
      }
    }
    const double di = alpha[i] - ai, dj = alpha[j] - aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(i, t) * di + Q(j, t) * dj;
  }

  // rho from the free multipliers, or the midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = ys[t] * G[t];
    if (alpha[t] >= C) {
      if (ys[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (ys[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  double rho = 0.0;
  if (n_free > 0) rho = free_sum / static_cast<double>(n_free);
  else if (std::isfinite(ub) && std::isfinite(lb)) rho = (ub + lb) / 2.0;
  else rho = std::isfinite(ub) ? ub : lb;

  SvmModel m;
  m.kernel = kernel;
  m.c = C;
  m.bias = -rho;
  m.iterations = iter;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0.0) {
      m.support_vectors.push_back(xs[t]);
      m.coef.push_back(ys[t] * alpha[t]);
      m.support_indices.push_back(t);
    }
  return m;
}

SvmPrediction svm_predict(const SvmModel& m, std::span<const double> x) {
  if (!m.support_vectors.empty() && x.size() != m.dimension())
    throw ShapeError("SVM input has " + std::to_string(x.size()) + " features, expected " +
                     std::to_string(m.dimension()));
  double f = m.bias;
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i) f += m.coef[i] * m.kernel(m.support_vectors[i], x);
  return {f >= 0.0 ? 1 : -1, f};
}

}  // namespace tongue
