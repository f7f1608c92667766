#include "tongue/metrics.hpp"

namespace tongue {

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw ShapeError("predictions (" + std::to_string(predicted.size()) + ") and truth (" +
                     std::to_string(truth.size()) + ") differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((predicted[i] != 1 && predicted[i] != -1) || (truth[i] != 1 && truth[i] != -1))
      throw ValidationError("labels must be -1 or +1");
    const bool p = predicted[i] == 1, t = truth[i] == 1;
    if (p && t) ++cm.tp;
    else if (p) ++cm.fp;
    else if (t) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  std::vector<int> p, t;
  for (Label l : predicted) p.push_back(signed_label(l));
  for (Label l : truth) t.push_back(signed_label(l));
  return confusion(std::span<const int>(p), std::span<const int>(t));
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("metrics need at least one evaluated sample");
  Metrics m;
  m.acc = ratio(cm.tp + cm.tn, cm.total());
  m.sen = ratio(cm.tp, cm.tp + cm.fn);
  m.spe = ratio(cm.tn, cm.tn + cm.fp);
  m.ppv = ratio(cm.tp, cm.tp + cm.fp);
  m.npv = ratio(cm.tn, cm.tn + cm.fn);
  if (m.ppv && m.sen && *m.ppv + *m.sen > 0.0) m.f1 = 2.0 * *m.ppv * *m.sen / (*m.ppv + *m.sen);
  return m;
}

}  // namespace tongue
