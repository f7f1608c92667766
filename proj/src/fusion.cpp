#include "tongue/fusion.hpp"

namespace tongue {

CompositeImage build_composite(const ImageTensor& region5, const std::array<FeatureVector, 4>& features,
                               std::string region5_id, std::array<std::string, 4> feature_ids) {
  if (region5.height() != kCentreRegionSize || region5.width() != kCentreRegionSize || region5.channels() != 3)
    throw ShapeError("composite centre block must be 30x30x3, got " + std::to_string(region5.height()) + "x" +
                     std::to_string(region5.width()) + "x" + std::to_string(region5.channels()));
  for (std::size_t k = 0; k < 4; ++k) {
    if (features[k].size() != static_cast<std::size_t>(kExtractorHidden))
      throw ShapeError("feature vector f" + std::to_string(k + 1) + " has " + std::to_string(features[k].size()) +
                       " entries, expected 31");
    for (double v : features[k].values)
      if (!(v > 0.0 && v < 1.0)) throw ValidationError("feature entries must lie strictly inside (0,1)");
  }

  constexpr int plane = kCompositeSize * kCompositeSize;
  std::vector<double> data(static_cast<std::size_t>(plane) * 3);
  const auto src = region5.data();
  for (int ch = 0; ch < 3; ++ch) {
    for (int pos = 0; pos < kCentreSlots; ++pos) data[static_cast<std::size_t>(pos) * 3 + ch] = src[static_cast<std::size_t>(pos) * 3 + ch];
    int pos = kCentreSlots;
    for (const auto& f : features)
      for (double v : f.values) data[static_cast<std::size_t>(pos++) * 3 + ch] = v;
  }
  return {ImageTensor(kCompositeSize, kCompositeSize, 3, std::move(data)), std::move(region5_id),
          std::move(feature_ids)};
}

std::vector<double> extractor_input(const ImageTensor& region, int channel) {
  return vectorize_channel(resize(region, kFeatureInputSize, kFeatureInputSize), channel);
}

LabeledComposite fuse_sample(const FusionSample& s, const std::array<MlpModel, 4>& extractors, int channel) {
  if (s.regions.size() != 5)
    throw ValidationError("sample '" + s.id + "' has " + std::to_string(s.regions.size()) + " regions, expected 5");
  for (std::size_t k = 0; k < 5; ++k)
    if (s.regions[k].empty()) throw ValidationError("sample '" + s.id + "' is missing region " + std::to_string(k + 1));
  std::array<FeatureVector, 4> feats;
  std::array<std::string, 4> ids;
  for (std::size_t k = 0; k < 4; ++k) {
    feats[k] = mlp_extract(extractors[k], extractor_input(s.regions[k], channel));
    ids[k] = s.id + "_f" + std::to_string(k + 1);
  }
  const ImageTensor centre = resize(s.regions[4], kCentreRegionSize, kCentreRegionSize);
  return {build_composite(centre, feats, s.id + "_r5", ids), s.label};
}

std::vector<LabeledComposite> fuse_dataset(const std::vector<FusionSample>& samples,
                                           const std::array<MlpModel, 4>& extractors, int channel) {
  std::vector<LabeledComposite> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(fuse_sample(s, extractors, channel));
  return out;
}

}  // namespace tongue
