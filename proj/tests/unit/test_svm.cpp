#include <gtest/gtest.h>

#include <cmath>

#include "tongue/errors.hpp"
#include "tongue/svm.hpp"

using namespace tongue;

namespace {

using Data = std::vector<std::vector<double>>;

std::vector<double> alphas_of(const SvmModel& m, std::size_t n) {
  std::vector<double> a(n, 0.0);
  for (std::size_t k = 0; k < m.support_indices.size(); ++k) a[m.support_indices[k]] = std::abs(m.coef[k]);
  return a;
}

double decision(const SvmModel& m, const std::vector<double>& x) {
  // naive kernel sum, written out independently of svm_predict
  double f = m.bias;
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i) {
    double k = 0;
    if (m.kernel.type == KernelType::linear) {
      for (std::size_t d = 0; d < x.size(); ++d) k += m.support_vectors[i][d] * x[d];
    } else {
      double s = 0;
      for (std::size_t d = 0; d < x.size(); ++d) s += (m.support_vectors[i][d] - x[d]) * (m.support_vectors[i][d] - x[d]);
      k = std::exp(-m.kernel.gamma * s);
    }
    f += m.coef[i] * k;
  }
  return f;
}

double dual_objective(const Data& xs, const std::vector<int>& ys, const std::vector<double>& a, const Kernel& k) {
  double lin = 0, quad = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lin += a[i];
    for (std::size_t j = 0; j < xs.size(); ++j) quad += a[i] * a[j] * ys[i] * ys[j] * k(xs[i], xs[j]);
  }
  return lin - 0.5 * quad;
}

// Oracle: projected gradient ascent on the dual. The projection onto
// {0 <= a <= C, sum y a = 0} is found by bisection on the multiplier.
std::vector<double> dual_oracle(const Data& xs, const std::vector<int>& ys, double c, const Kernel& k) {
  const std::size_t n = xs.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  double trace = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      q[i][j] = ys[i] * ys[j] * k(xs[i], xs[j]);
      if (i == j) trace += q[i][j];
    }
  const double step = 1.0 / trace;
  std::vector<double> a(n, 0.0), v(n);
  auto project = [&](std::vector<double>& w) {
    auto excess = [&](double lam) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += ys[i] * std::clamp(w[i] - lam * ys[i], 0.0, c);
      return s;
    };
    double lo = -1e6, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) > 0 ? lo : hi) = mid;
    }
    const double lam = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::clamp(w[i] - lam * ys[i], 0.0, c);
  };
  for (int it = 0; it < 20000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double g = 1.0;
      for (std::size_t j = 0; j < n; ++j) g -= q[i][j] * a[j];
      v[i] = a[i] + step * g;
    }
    project(v);
    a = v;
  }
  return a;
}

void blobs(std::uint64_t seed, int per_class, double gap, Data& xs, std::vector<int>& ys) {
  Rng rng(seed);
  for (int cls : {-1, 1})
    for (int i = 0; i < per_class; ++i) {
      xs.push_back({cls * gap + rng.normal(0.0, 0.5), rng.normal(0.0, 0.5)});
      ys.push_back(cls);
    }
}

void audit(const SvmModel& m, const Data& xs, const std::vector<int>& ys, double c, double tol) {
  const auto a = alphas_of(m, xs.size());
  double sum = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += ys[i] * a[i];
    EXPECT_GE(a[i], 0.0);
    EXPECT_LE(a[i], c);
    const double yf = ys[i] * decision(m, xs[i]);
    if (a[i] <= 0.0) {
      EXPECT_GE(yf, 1 - tol) << "point " << i;
    } else if (a[i] >= c) {
      EXPECT_LE(yf, 1 + tol) << "point " << i;
    } else {
      EXPECT_NEAR(yf, 1.0, tol) << "point " << i;
    }
  }
  EXPECT_NEAR(sum, 0.0, 1e-6);
}

}  // namespace

TEST(Svm, SymmetricTwoPoints) {
  const Data xs{{-1, 0}, {1, 0}};
  const std::vector<int> ys{-1, 1};
  const SvmModel m = svm_train(xs, ys, {1000.0, {KernelType::linear, 0}, 1e-6});
  // f(x) = x1: unit slope along x1, zero along x2, zero bias
  EXPECT_NEAR(svm_predict(m, std::vector<double>{0, 0}).decision, 0.0, 1e-9);
  EXPECT_NEAR(svm_predict(m, std::vector<double>{1, 0}).decision, 1.0, 1e-9);
  EXPECT_NEAR(svm_predict(m, std::vector<double>{-1, 0}).decision, -1.0, 1e-9);
  EXPECT_NEAR(svm_predict(m, std::vector<double>{0, 5}).decision, 0.0, 1e-9);
  EXPECT_EQ(svm_predict(m, std::vector<double>{3, 0}).label, 1);
  EXPECT_EQ(m.support_vectors.size(), 2u);
}

TEST(Svm, BoundaryTieIsPositive) {
  SvmModel m;
  m.kernel = {KernelType::linear, 0};
  m.support_vectors = {{1.0, 0.0}};
  m.coef = {1.0};
  m.bias = 0.0;
  EXPECT_EQ(svm_predict(m, std::vector<double>{0.0, 3.0}).label, 1);
  EXPECT_EQ(svm_predict(m, std::vector<double>{-1e-9, 3.0}).label, -1);
}

TEST(Svm, Xor) {
  const Data xs{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> ys{-1, -1, 1, 1};
  auto accuracy = [&](const SvmModel& m) {
    int ok = 0;
    for (std::size_t i = 0; i < 4; ++i) ok += svm_predict(m, xs[i]).label == ys[i];
    return ok / 4.0;
  };
  EXPECT_LE(accuracy(svm_train(xs, ys, {10.0, {KernelType::linear, 0}, 1e-3})), 0.75);
  EXPECT_EQ(accuracy(svm_train(xs, ys, {10.0, {KernelType::rbf, 1.0}, 1e-3})), 1.0);
}

TEST(Svm, KktAndOracleOnBlobs) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Data xs;
    std::vector<int> ys;
    blobs(seed, 15, 1.5, xs, ys);
    for (const Kernel k : {Kernel{KernelType::linear, 0}, Kernel{KernelType::rbf, 0.5}}) {
      const double c = 1.0, tol = 1e-3;
      const SvmModel m = svm_train(xs, ys, {c, k, tol});
      audit(m, xs, ys, c, tol);
      const double ours = dual_objective(xs, ys, alphas_of(m, xs.size()), m.kernel);
      const double oracle = dual_objective(xs, ys, dual_oracle(xs, ys, c, m.kernel), m.kernel);
      EXPECT_NEAR(ours, oracle, 1e-3) << "seed " << seed;
    }
  }
}

TEST(Svm, SeparableHasNoHingeViolations) {
  Data xs;
  std::vector<int> ys;
  blobs(9, 20, 4.0, xs, ys);
  const SvmModel m = svm_train(xs, ys, {100.0, {KernelType::linear, 0}, 1e-3});
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_GE(ys[i] * svm_predict(m, xs[i]).decision, 1 - 1e-3);
}

TEST(Svm, DecisionMatchesNaiveSum) {
  Data xs;
  std::vector<int> ys;
  blobs(4, 12, 1.0, xs, ys);
  const SvmModel m = svm_train(xs, ys, {1.0, {KernelType::rbf, 0}, 1e-3});
  EXPECT_NEAR(m.kernel.gamma, 0.5, 1e-15);  // 1 / dimension
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    EXPECT_NEAR(svm_predict(m, x).decision, decision(m, x), 1e-12);
  }
}

TEST(Svm, ScalingInvariance) {
  Data xs;
  std::vector<int> ys;
  blobs(6, 10, 1.0, xs, ys);
  const SvmModel m = svm_train(xs, ys, {1.0, {KernelType::rbf, 0.7}, 1e-3});
  SvmModel scaled = m;
  for (double& c : scaled.coef) c *= 3.7;
  scaled.bias *= 3.7;
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    EXPECT_EQ(svm_predict(m, x).label, svm_predict(scaled, x).label);
  }
}

TEST(Svm, Errors) {
  const Data xs{{0, 0}, {1, 1}};
  EXPECT_THROW(svm_train(xs, std::vector<int>{1, 1}, {}), ValidationError);
  EXPECT_THROW(svm_train(xs, std::vector<int>{1, 0}, {}), ValidationError);
  EXPECT_THROW(svm_train(xs, std::vector<int>{1}, {}), ShapeError);
  EXPECT_THROW(svm_train(xs, std::vector<int>{1, -1}, {0.0, {}, 1e-3}), ValidationError);
  const SvmModel m = svm_train(xs, std::vector<int>{1, -1}, {});
  EXPECT_THROW(svm_predict(m, std::vector<double>{1, 2, 3}), ShapeError);
}
