#pragma once

#include <array>
#include <string>
#include <vector>

#include "tongue/core.hpp"
#include "tongue/mlp.hpp"
#include "tongue/regionizer.hpp"

namespace tongue {

inline constexpr int kCompositeSize = 32;
inline constexpr int kCentreSlots = kCentreRegionSize * kCentreRegionSize;  // 900
inline constexpr int kFeatureSlots = 4 * kExtractorHidden;                 // 124

/// 32x32x3 image: per channel, row-major positions 0..899 hold region-5
/// pixels of that channel and positions 900..1023 hold f1|f2|f3|f4, the
/// same in every channel.
struct CompositeImage {
  ImageTensor image;
  std::string region5_id;
  std::array<std::string, 4> feature_ids;
};

CompositeImage build_composite(const ImageTensor& region5, const std::array<FeatureVector, 4>& features,
                               std::string region5_id = {}, std::array<std::string, 4> feature_ids = {});

/// Extractor input for one region: resize to 32x32 then take one channel.
std::vector<double> extractor_input(const ImageTensor& region, int channel);

struct FusionSample {
  std::string id;
  Label label = Label::healthy;
  std::vector<ImageTensor> regions;  // r1..r5, either 200x200 or already resized
};

struct LabeledComposite {
  CompositeImage composite;
  Label label = Label::healthy;
};

/// Per sample: f_k = extractor_k(vectorize(resize(r_k, 32, 32), channel)),
/// r5' = resize(r5, 30, 30), composite = build_composite(r5', f1..f4).
/// Output order follows input order.
std::vector<LabeledComposite> fuse_dataset(const std::vector<FusionSample>& samples,
                                           const std::array<MlpModel, 4>& extractors, int channel);

LabeledComposite fuse_sample(const FusionSample& sample, const std::array<MlpModel, 4>& extractors, int channel);

}  // namespace tongue
