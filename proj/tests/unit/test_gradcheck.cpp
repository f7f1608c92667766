#include <gtest/gtest.h>

#include "tongue/gradcheck.hpp"

using namespace tongue;

namespace {
std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform();
  return x;
}
}  // namespace

TEST(GradCheck, QuadraticIsExact) {
  // linear model w.x + b with squared loss
  Rng rng(1);
  const auto x = random_vec(rng, 40);
  // parameters scaled so the loss stays O(1); rounding in the differences
  // grows with |loss| / step
  const double target = 0.3;
  auto loss = [&](std::span<const double> p) {
    double z = p[40];
    for (int i = 0; i < 40; ++i) z += p[i] * x[i];
    return 0.5 * (z - target) * (z - target);
  };
  std::vector<double> p = random_vec(rng, 41);
  for (double& v : p) v *= 0.05;
  double z = p[40];
  for (int i = 0; i < 40; ++i) z += p[i] * x[i];
  std::vector<double> g(41);
  for (int i = 0; i < 40; ++i) g[i] = (z - target) * x[i];
  g[40] = z - target;
  EXPECT_LT(grad_check(p, loss, g, 1e-5, 3), 1e-9);
}

TEST(GradCheck, DetectsWrongGradient) {
  auto loss = [](std::span<const double> p) { return p[0] * p[0] + 3 * p[1]; };
  const std::vector<double> p{1.0, 2.0};
  const std::vector<double> wrong{2.0, 1.0};
  EXPECT_GT(grad_check(p, loss, wrong, 1e-5, 0), 0.1);
}

TEST(GradCheck, Mlp) {
  Rng rng(2);
  const MlpModel m = mlp_init(11);
  const auto x = random_vec(rng, kExtractorInputs);
  EXPECT_LT(grad_check(m, x, 1, 1e-5, 5), 1e-4);
  EXPECT_LT(grad_check(m, x, 0, 1e-5, 6), 1e-4);
}

TEST(GradCheck, DefaultCnn) {
  Rng rng(3);
  const CnnModel m = cnn_init(default_cnn_spec(), 12);
  const auto x = random_vec(rng, 3 * 32 * 32);
  EXPECT_LT(grad_check(m, x, 1, 1e-5, 7), 1e-4);
  EXPECT_LT(grad_check(m, x, 0, 1e-5, 8), 1e-4);
}

TEST(GradCheck, FlattenRoundTrip) {
  const MlpModel m = mlp_init(4, 10, 3);
  EXPECT_EQ(with_parameters(m, flatten_parameters(m)), m);
  const CnnModel c = cnn_init(default_cnn_spec(), 4);
  EXPECT_EQ(with_parameters(c, flatten_parameters(c)), c);
}
