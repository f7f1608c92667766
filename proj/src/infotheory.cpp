#include "tongue/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace tongue {

ProbVector::ProbVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw ValidationError("probability vector is empty");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("probability entries must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("probabilities sum to " + std::to_string(sum) + ", not 1");
}

std::vector<std::uint64_t> JointHistogram::x_marginal() const {
  std::vector<std::uint64_t> m(bins, 0);
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) m[i] += at(i, j);
  return m;
}

std::vector<std::uint64_t> JointHistogram::y_marginal() const {
  std::vector<std::uint64_t> m(bins, 0);
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) m[j] += at(i, j);
  return m;
}

int bin_of(double value, int bins) noexcept {
  const int b = static_cast<int>(std::floor(value * bins));
  return std::clamp(b, 0, bins - 1);
}

JointHistogram joint_histogram(std::span<const double> x, std::span<const double> y, int bins) {
  if (bins < 2) throw DomainError("histogram needs at least 2 bins");
  if (x.size() != y.size()) throw ShapeError("paired samples differ in length");
  JointHistogram h;
  h.bins = bins;
  h.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= 0.0 && x[k] <= 1.0 && y[k] >= 0.0 && y[k] <= 1.0))
      throw ValidationError("mutual information samples must lie in [0,1]");
    ++h.counts[static_cast<std::size_t>(bin_of(x[k], bins)) * bins + bin_of(y[k], bins)];
  }
  h.total = x.size();
  return h;
}

double shannon_entropy(const ProbVector& p) {
  double h = 0.0;
  for (double v : p.values())
    if (v > 0.0) h -= v * std::log2(v);
  return std::max(h, 0.0);
}

double entropy_of_counts(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  // H = log2 N - (1/N) sum c log2 c
  const double n = static_cast<double>(total);
  double s = 0.0;
  for (auto c : counts)
    if (c > 0) s += static_cast<double>(c) * std::log2(static_cast<double>(c));
  return std::max(std::log2(n) - s / n, 0.0);
}

double renyi_entropy(const ProbVector& p, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("Renyi order alpha must be > 0");
  if (alpha == 1.0) return shannon_entropy(p);
  double s = 0.0;
  for (double v : p.values())
    if (v > 0.0) s += std::pow(v, alpha);
  return std::log2(s) / (1.0 - alpha);
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) throw ShapeError("KL divergence needs distributions over the same support");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    d += p[i] * std::log2(p[i] / q[i]);
  }
  return std::max(d, 0.0);
}

double mutual_information(std::span<const double> x, std::span<const double> y, int bins) {
  if (x.size() != y.size()) throw ShapeError("paired samples differ in length");
  if (x.size() < 2) throw ShapeError("mutual information needs at least 2 paired samples");
  const JointHistogram h = joint_histogram(x, y, bins);
  const auto hx = entropy_of_counts(h.x_marginal());
  const auto hy = entropy_of_counts(h.y_marginal());
  const auto hxy = entropy_of_counts(h.counts);
  const double mi = hx + hy - hxy;
  return mi < 0.0 ? 0.0 : mi;
}

namespace {

void check_feature_sets(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) {
  if (a.empty() || b.empty()) throw ValidationError("mean MI needs both feature sets to be non-empty");
  const std::size_t n = a.front().size();
  for (const auto* set : {&a, &b})
    for (const auto& v : *set)
      if (v.size() != n) throw ShapeError("feature vectors differ in length");
}

}  // namespace

double mean_cross_class_mi(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b,
                           const MiOptions& opt) {
  check_feature_sets(a, b);
  if (opt.pairing == Pairing::matched) {
    const std::size_t n = std::min(a.size(), b.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += mutual_information(a[i], b[i], opt.bins);
    return sum / static_cast<double>(n);
  }
  if (opt.max_pairs == 0) throw DomainError("max_pairs must be positive");

  const std::uint64_t total = static_cast<std::uint64_t>(a.size()) * b.size();
  std::vector<std::uint64_t> pairs;
  if (total <= opt.max_pairs) {
    pairs.resize(total);
    std::iota(pairs.begin(), pairs.end(), 0);
  } else {
    // Floyd's algorithm: max_pairs distinct indices, drawn before any
    // evaluation so the average does not depend on evaluation order.
    Rng rng(opt.seed);
    std::set<std::uint64_t> chosen;
    for (std::uint64_t j = total - opt.max_pairs; j < total; ++j) {
      const std::uint64_t t = rng.below(j + 1);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    pairs.assign(chosen.begin(), chosen.end());
  }
  double sum = 0.0;
  for (std::uint64_t p : pairs) sum += mutual_information(a[p / b.size()], b[p % b.size()], opt.bins);
  return sum / static_cast<double>(pairs.size());
}

std::vector<LayerScore> rank_layers(std::span<const LayerFeatures> layers, const MiOptions& opt) {
  if (layers.empty()) throw ValidationError("layer selection needs at least one layer");
  std::vector<LayerScore> scores;
  for (std::size_t i = 0; i < layers.size(); ++i)
    scores.push_back({layers[i].layer_id, mean_cross_class_mi(layers[i].class_a, layers[i].class_b, opt), i});
  std::stable_sort(scores.begin(), scores.end(),
                   [](const LayerScore& l, const LayerScore& r) { return l.mean_mi < r.mean_mi; });
  return scores;
}

std::string select_layer(std::span<const LayerFeatures> layers, const MiOptions& opt) {
  return rank_layers(layers, opt).front().layer_id;
}

}  // namespace tongue
