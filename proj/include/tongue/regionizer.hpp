#pragma once

#include <array>
#include <vector>

#include "tongue/core.hpp"

namespace tongue {

inline constexpr int kRegisteredSize = 512;
inline constexpr int kMargin = 56;
inline constexpr int kCropSize = 400;
inline constexpr int kRegionSize = 200;
inline constexpr int kFeatureInputSize = 32;  // regions 1-4 feeding the extractors
inline constexpr int kCentreRegionSize = 30;  // region 5 inside the composite

/// Five windows of the 400x400 crop: r1 (0,0), r2 (0,200), r3 (200,0),
/// r4 (200,200) and the overlapping centre window r5 at (100,100), offsets
/// given as (row, col). `split_regions` yields 200x200 windows;
/// `resize_regions` shrinks them to the sizes the fusion stage consumes.
struct RegionSet {
  std::array<ImageTensor, 5> regions;

  const ImageTensor& operator[](std::size_t i) const { return regions[i]; }
  ImageTensor& operator[](std::size_t i) { return regions[i]; }
};

/// Offsets (row, col) of r1..r5 inside the crop.
inline constexpr std::array<std::array<int, 2>, 5> kRegionOffsets{
    {{0, 0}, {0, 200}, {200, 0}, {200, 200}, {100, 100}}};

/// Rectangular window copy; throws ShapeError if it leaves the image.
ImageTensor crop(const ImageTensor& image, int top, int left, int height, int width);

/// Centred 400x400 window (rows/cols 56..455) of a 512x512 image.
ImageTensor crop_margins(const ImageTensor& image);

/// Black border of `margin` pixels on each side.
ImageTensor pad(const ImageTensor& image, int margin);

RegionSet split_regions(const ImageTensor& image);

/// Bilinear resampling with pixel-centre alignment: output pixel i samples
/// the source at (i + 0.5) * in/out - 0.5, clamped to the valid range.
/// Constant images stay exactly constant and values never leave the input
/// range.
ImageTensor resize(const ImageTensor& image, int out_height, int out_width);

/// r1..r4 to 32x32, r5 to 30x30.
RegionSet resize_regions(const RegionSet& set);

/// Row-major flattening of one channel.
std::vector<double> vectorize_channel(const ImageTensor& image, int channel);

}  // namespace tongue
