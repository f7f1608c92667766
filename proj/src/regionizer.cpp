#include "tongue/regionizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tongue {

ImageTensor crop(const ImageTensor& image, int top, int left, int height, int width) {
  if (height <= 0 || width <= 0 || top < 0 || left < 0 || top + height > image.height() ||
      left + width > image.width())
    throw ShapeError("crop window " + std::to_string(height) + "x" + std::to_string(width) + " at (" +
                     std::to_string(top) + "," + std::to_string(left) + ") exceeds a " +
                     std::to_string(image.height()) + "x" + std::to_string(image.width()) + " image");
  const int nc = image.channels();
  const auto src = image.data();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(height) * width * nc);
  for (int r = 0; r < height; ++r) {
    const auto begin = src.begin() + (static_cast<std::ptrdiff_t>(top + r) * image.width() + left) * nc;
    out.insert(out.end(), begin, begin + static_cast<std::ptrdiff_t>(width) * nc);
  }
  return ImageTensor(height, width, nc, std::move(out));
}

ImageTensor crop_margins(const ImageTensor& image) {
  if (image.height() != kRegisteredSize || image.width() != kRegisteredSize)
    throw ShapeError("crop_margins expects a 512x512 image, got " + std::to_string(image.height()) +
                     "x" + std::to_string(image.width()));
  return crop(image, kMargin, kMargin, kCropSize, kCropSize);
}

ImageTensor pad(const ImageTensor& image, int margin) {
  if (margin < 0) throw ShapeError("negative padding");
  const int h = image.height() + 2 * margin, w = image.width() + 2 * margin, nc = image.channels();
  std::vector<double> out(static_cast<std::size_t>(h) * w * nc, 0.0);
  const auto src = image.data();
  for (int r = 0; r < image.height(); ++r)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r) * image.width() * nc, image.width() * nc,
                out.begin() + (static_cast<std::ptrdiff_t>(r + margin) * w + margin) * nc);
  return ImageTensor(h, w, nc, std::move(out));
}

RegionSet split_regions(const ImageTensor& image) {
  if (image.height() != kCropSize || image.width() != kCropSize)
    throw ShapeError("split_regions expects a 400x400 image, got " + std::to_string(image.height()) +
                     "x" + std::to_string(image.width()));
  RegionSet set;
  for (std::size_t i = 0; i < 5; ++i)
    set[i] = crop(image, kRegionOffsets[i][0], kRegionOffsets[i][1], kRegionSize, kRegionSize);
  return set;
}

namespace {

struct Tap {
  int lo, hi;
  double frac;
};

std::vector<Tap> sample_positions(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    int lo = static_cast<int>(std::floor(s));
    taps[i] = {lo, std::min(lo + 1, in - 1), s - lo};
  }
  return taps;
}

}  // namespace

ImageTensor resize(const ImageTensor& image, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0) throw ShapeError("resize dims must be positive");
  if (image.empty()) throw ShapeError("cannot resize an empty image");
  const int w = image.width(), nc = image.channels();
  const auto src = image.data();
  const auto rows = sample_positions(image.height(), out_height);
  const auto cols = sample_positions(w, out_width);
  auto at = [&](int r, int c, int ch) { return src[(static_cast<std::size_t>(r) * w + c) * nc + ch]; };

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(out_height) * out_width * nc);
  for (const Tap& ry : rows) {
    for (const Tap& cx : cols) {
      for (int ch = 0; ch < nc; ++ch) {
        // a + f*(b-a) keeps constants exact and stays inside [min(a,b), max(a,b)]
        const double a = at(ry.lo, cx.lo, ch), b = at(ry.lo, cx.hi, ch);
        const double c = at(ry.hi, cx.lo, ch), d = at(ry.hi, cx.hi, ch);
        const double top = a + cx.frac * (b - a);
        const double bottom = c + cx.frac * (d - c);
        out.push_back(std::clamp(top + ry.frac * (bottom - top), 0.0, 1.0));
      }
    }
  }
  return ImageTensor(out_height, out_width, nc, std::move(out));
}

RegionSet resize_regions(const RegionSet& set) {
  RegionSet out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = resize(set[i], kFeatureInputSize, kFeatureInputSize);
  out[4] = resize(set[4], kCentreRegionSize, kCentreRegionSize);
  return out;
}

std::vector<double> vectorize_channel(const ImageTensor& image, int channel) {
  if (channel < 0 || channel >= image.channels())
    throw ShapeError("channel " + std::to_string(channel) + " out of range for a " +
                     std::to_string(image.channels()) + "-channel image");
  const int nc = image.channels();
  const auto src = image.data();
  std::vector<double> out(static_cast<std::size_t>(image.height()) * image.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i * nc + channel];
  return out;
}

}  // namespace tongue
