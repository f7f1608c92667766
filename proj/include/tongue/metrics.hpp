#pragma once

#include <optional>
#include <span>

#include "tongue/core.hpp"

namespace tongue {

/// Counts with patient (+1) as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  /// The same outcomes viewed with healthy as the positive class.
  ConfusionMatrix swapped() const noexcept { return {tn, fn, tp, fp}; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// A metric whose denominator is zero is std::nullopt ("undefined"), never 0.
struct Metrics {
  std::optional<double> acc, sen, spe, ppv, npv, f1;
};

/// Labels are +1 (patient) / -1 (healthy).
ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth);
ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth);

/// acc = (tp+tn)/N, sen = tp/(tp+fn), spe = tn/(tn+fp), ppv = tp/(tp+fp),
/// npv = tn/(tn+fn), f1 = 2 ppv sen / (ppv + sen).
Metrics metrics(const ConfusionMatrix& cm);

}  // namespace tongue
