#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>

#include "tongue/errors.hpp"
#include "tongue/infotheory.hpp"

using namespace tongue;

namespace {

ProbVector random_prob(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double s = 0;
  for (auto& v : p) s += (v = rng.uniform() + 1e-3);
  for (auto& v : p) v /= s;
  return ProbVector(p);
}

std::vector<double> uniforms(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform();
  return x;
}

// Brute force: I = sum p(x,y) log2(p(x,y) / (p(x) p(y))) over observed bin pairs.
double mi_oracle(const std::vector<double>& x, const std::vector<double>& y, int bins) {
  auto bin = [bins](double v) { return std::min(bins - 1, static_cast<int>(std::floor(v * bins))); };
  std::map<std::pair<int, int>, double> pxy;
  std::map<int, double> px, py;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    pxy[{bin(x[i]), bin(y[i])}] += 1 / n;
    px[bin(x[i])] += 1 / n;
    py[bin(y[i])] += 1 / n;
  }
  double mi = 0;
  for (const auto& [k, p] : pxy) mi += p * std::log2(p / (px[k.first] * py[k.second]));
  return std::max(mi, 0.0);
}

double binned_entropy(const std::vector<double>& x, int bins) {
  std::vector<std::uint64_t> counts(bins);
  for (double v : x) ++counts[bin_of(v, bins)];
  return entropy_of_counts(counts);
}

}  // namespace

TEST(Shannon, Examples) {
  EXPECT_NEAR(shannon_entropy(ProbVector({0.25, 0.25, 0.25, 0.25})), 2.0, 1e-12);
  EXPECT_EQ(shannon_entropy(ProbVector({1.0, 0.0, 0.0})), 0.0);
  EXPECT_NEAR(shannon_entropy(ProbVector({0.5, 0.25, 0.25})), 1.5, 1e-12);
}

TEST(Shannon, UpperBoundEqualityOnlyWhenUniform) {
  Rng rng(1);
  for (std::size_t n = 2; n < 20; ++n) {
    EXPECT_NEAR(shannon_entropy(ProbVector(std::vector<double>(n, 1.0 / n))), std::log2(n), 1e-12);
    const auto p = random_prob(rng, n);
    EXPECT_LT(shannon_entropy(p), std::log2(n) - 1e-12);
  }
}

TEST(ProbVectorCheck, Rejects) {
  EXPECT_THROW(ProbVector({0.5, 0.4}), ValidationError);
  EXPECT_THROW(ProbVector({1.5, -0.5}), ValidationError);
  EXPECT_THROW(ProbVector({}), ValidationError);
}

TEST(Renyi, UniformAllOrders) {
  for (std::size_t n : {2u, 3u, 7u, 16u})
    for (double a : {0.25, 0.5, 1.0, 2.0, 4.0, 10.0})
      EXPECT_NEAR(renyi_entropy(ProbVector(std::vector<double>(n, 1.0 / n)), a), std::log2(n), 1e-12);
  EXPECT_NEAR(renyi_entropy(ProbVector({0.5, 0.5}), 2.0), 1.0, 1e-12);
  EXPECT_THROW(renyi_entropy(ProbVector({0.5, 0.5}), 0.0), DomainError);
  EXPECT_THROW(renyi_entropy(ProbVector({0.5, 0.5}), -1.0), DomainError);
}

TEST(Renyi, LimitAndMonotone) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_prob(rng, 2 + rng.below(10));
    const double h = shannon_entropy(p);
    EXPECT_LT(std::abs(renyi_entropy(p, 1 + 1e-4) - h), 1e-3);
    EXPECT_LT(std::abs(renyi_entropy(p, 1 - 1e-4) - h), 1e-3);
    double prev = std::numeric_limits<double>::infinity();
    for (double a : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const double r = renyi_entropy(p, a);
      EXPECT_LE(r, prev + 1e-12);
      prev = r;
    }
  }
}

TEST(Kl, Examples) {
  EXPECT_NEAR(kl_divergence(ProbVector({1.0, 0.0}), ProbVector({0.5, 0.5})), 1.0, 1e-12);
  EXPECT_EQ(kl_divergence(ProbVector({0.5, 0.5}), ProbVector({1.0, 0.0})), std::numeric_limits<double>::infinity());
  EXPECT_THROW(kl_divergence(ProbVector({0.5, 0.5}), ProbVector({0.2, 0.3, 0.5})), ValidationError);
}

TEST(Kl, NonNegativeZeroIffEqual) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.below(8);
    const auto p = random_prob(rng, n), q = random_prob(rng, n);
    EXPECT_EQ(kl_divergence(p, p), 0.0);
    EXPECT_GT(kl_divergence(p, q), 1e-12);
  }
}

TEST(MutualInformation, SelfInformation) {
  Rng rng(4);
  const auto x = uniforms(rng, 5000);
  for (int b : {2, 8, 16}) EXPECT_NEAR(mutual_information(x, x, b), binned_entropy(x, b), 1e-9);
}

TEST(MutualInformation, ReflectionIsBijection) {
  Rng rng(5);
  const auto x = uniforms(rng, 5000);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 - x[i];
  EXPECT_NEAR(mutual_information(x, y, 16), binned_entropy(x, 16), 1e-9);
}

TEST(MutualInformation, IndependentUniforms) {
  Rng rng(6);
  const auto x = uniforms(rng, 10000), y = uniforms(rng, 10000);
  EXPECT_LT(mutual_information(x, y, 16), 0.05);
}

TEST(MutualInformation, SymmetricAndMatchesOracle) {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 2 + rng.below(300);
    auto x = uniforms(rng, n), y = uniforms(rng, n);
    for (std::size_t k = 0; k < n; ++k) y[k] = 0.5 * y[k] + 0.5 * x[k] * x[k];
    const int b = 2 + static_cast<int>(rng.below(15));
    EXPECT_LT(std::abs(mutual_information(x, y, b) - mutual_information(y, x, b)), 1e-12);
    EXPECT_NEAR(mutual_information(x, y, b), mi_oracle(x, y, b), 1e-9);
  }
}

TEST(MutualInformation, DyadicCoarseningNeverIncreases) {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    auto x = uniforms(rng, 400), y = uniforms(rng, 400);
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = std::clamp(0.6 * x[k] + 0.4 * y[k], 0.0, 1.0);
    double prev = 0;
    for (int b : {2, 4, 8, 16, 32}) {
      const double mi = mutual_information(x, y, b);
      EXPECT_GE(mi, prev - 1e-12);
      prev = mi;
    }
  }
}

TEST(MutualInformation, Errors) {
  const std::vector<double> a{0.1, 0.2}, b{0.1};
  EXPECT_THROW(mutual_information(a, b, 4), ShapeError);
  EXPECT_THROW(mutual_information(b, b, 4), ValidationError);
  EXPECT_THROW(mutual_information(a, a, 1), ValidationError);
  const std::vector<double> bad{0.1, 1.5};
  EXPECT_THROW(mutual_information(bad, a, 4), ValidationError);
  EXPECT_THROW(mutual_information(a, a, 1), DomainError);
}

TEST(CrossClassMi, ConstantVectorsGiveZero) {
  const std::vector<std::vector<double>> a{std::vector<double>(20, 0.3)};
  EXPECT_EQ(mean_cross_class_mi(a, a, {}), 0.0);
}

TEST(CrossClassMi, SinglePairIsSelfInformation) {
  Rng rng(9);
  const std::vector<std::vector<double>> a{uniforms(rng, 64)};
  MiOptions opt;
  EXPECT_NEAR(mean_cross_class_mi(a, a, opt), mutual_information(a[0], a[0], opt.bins), 1e-12);
}

TEST(CrossClassMi, ExhaustiveMatchesDoubleLoop) {
  Rng rng(10);
  std::vector<std::vector<double>> a(6), b(5);
  for (auto& v : a) v = uniforms(rng, 40);
  for (auto& v : b) v = uniforms(rng, 40);
  MiOptions opt;
  opt.bins = 4;
  opt.max_pairs = 1000;
  double sum = 0;
  for (const auto& u : a)
    for (const auto& v : b) sum += mi_oracle(u, v, 4);
  EXPECT_NEAR(mean_cross_class_mi(a, b, opt), sum / 30.0, 1e-12);
}

TEST(CrossClassMi, SubsamplingIsSeeded) {
  Rng rng(11);
  std::vector<std::vector<double>> a(30), b(30);
  for (auto& v : a) v = uniforms(rng, 20);
  for (auto& v : b) v = uniforms(rng, 20);
  MiOptions opt;
  opt.max_pairs = 50;
  opt.seed = 4;
  EXPECT_EQ(mean_cross_class_mi(a, b, opt), mean_cross_class_mi(a, b, opt));
}

TEST(SelectLayer, OneLayer) {
  Rng rng(12);
  const std::vector<LayerFeatures> layers{{"only", {uniforms(rng, 10)}, {uniforms(rng, 10)}}};
  EXPECT_EQ(select_layer(layers, {}), "only");
}

TEST(SelectLayer, CopiesVersusIndependent) {
  Rng rng(13);
  LayerFeatures copies{"copies", {}, {}}, independent{"independent", {}, {}};
  for (int i = 0; i < 8; ++i) {
    auto v = uniforms(rng, 200);
    copies.class_a.push_back(v);
    copies.class_b.push_back(v);
    independent.class_a.push_back(uniforms(rng, 200));
    independent.class_b.push_back(uniforms(rng, 200));
  }
  MiOptions opt;
  opt.pairing = Pairing::matched;
  EXPECT_EQ(select_layer(std::vector<LayerFeatures>{copies, independent}, opt), "independent");
}

TEST(SelectLayer, TieGoesToShallowest) {
  Rng rng(14);
  LayerFeatures a{"first", {uniforms(rng, 30), uniforms(rng, 30)}, {uniforms(rng, 30)}};
  LayerFeatures b = a;
  b.layer_id = "second";
  EXPECT_EQ(select_layer(std::vector<LayerFeatures>{a, b}, {}), "first");
  EXPECT_THROW(select_layer(std::vector<LayerFeatures>{}, {}), ValidationError);
}
