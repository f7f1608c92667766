#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tongue/core.hpp"

namespace tongue {

/// Discrete distribution: non-negative entries summing to 1 within 1e-9.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> p);
  std::span<const double> values() const noexcept { return p_; }
  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

/// B x B equal-width histogram over [0,1]^2 of paired samples.
struct JointHistogram {
  int bins = 0;
  std::vector<std::uint64_t> counts;  // row = x bin, column = y bin
  std::uint64_t total = 0;

  std::uint64_t at(int bx, int by) const { return counts[static_cast<std::size_t>(bx) * bins + by]; }
  std::vector<std::uint64_t> x_marginal() const;
  std::vector<std::uint64_t> y_marginal() const;
};

/// Bin index of v in [0,1] under B equal-width bins; v = 1 lands in the last bin.
int bin_of(double value, int bins) noexcept;
JointHistogram joint_histogram(std::span<const double> x, std::span<const double> y, int bins);

/// Entropies are in bits; 0 log 0 is taken as 0.
double shannon_entropy(const ProbVector& p);
/// Entropy of the empirical distribution given by `counts`.
double entropy_of_counts(std::span<const std::uint64_t> counts);
/// (1/(1-alpha)) log2 sum p^alpha; alpha = 1 is the Shannon limit.
double renyi_entropy(const ProbVector& p, double alpha);
/// sum p log2(p/q); +infinity when p puts mass where q has none.
double kl_divergence(const ProbVector& p, const ProbVector& q);

/// Plug-in estimate H(X) + H(Y) - H(X,Y) over paired entries (x_k, y_k)
/// binned into `bins` equal-width bins per axis; tiny negative rounding is
/// clamped to 0.
double mutual_information(std::span<const double> x, std::span<const double> y, int bins);

enum class Pairing { cross, matched };

struct MiOptions {
  int bins = 8;
  std::size_t max_pairs = 2000;
  std::uint64_t seed = 0;
  Pairing pairing = Pairing::cross;
};

/// Mean MI over pairs (a, b) with a from `class_a` and b from `class_b`.
/// Cross pairing averages over all |A||B| pairs, or over a seeded uniform
/// sample of `max_pairs` distinct pairs when there are more; matched pairing
/// averages a_i against b_i for i < min(|A|,|B|).
double mean_cross_class_mi(std::span<const std::vector<double>> class_a,
                           std::span<const std::vector<double>> class_b, const MiOptions& options);

struct LayerFeatures {
  std::string layer_id;
  std::vector<std::vector<double>> class_a;  // healthy
  std::vector<std::vector<double>> class_b;  // patient
};

struct LayerScore {
  std::string layer_id;
  double mean_mi = 0.0;
  std::size_t order = 0;  // position in the input (0 = shallowest)
};

/// Scores sorted by ascending mean MI, ties kept in input order.
std::vector<LayerScore> rank_layers(std::span<const LayerFeatures> layers, const MiOptions& options);

/// Layer whose cross-class features share the least mutual information;
/// ties go to the earliest (shallowest) entry.
std::string select_layer(std::span<const LayerFeatures> layers, const MiOptions& options);

}  // namespace tongue
