#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tongue/errors.hpp"

namespace tongue {

/// Row-major H x W x C grid of intensities in [0, 1]. Immutable once built:
/// every operation producing an image assembles a buffer and hands it to the
/// validating constructor.
class ImageTensor {
 public:
  ImageTensor() = default;
  /// Zero-filled image.
  ImageTensor(int height, int width, int channels);
  /// Takes ownership of `data`; throws ShapeError on a length mismatch and
  /// ValidationError if any value lies outside [0, 1].
  ImageTensor(int height, int width, int channels, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  double at(int row, int col, int channel) const noexcept {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + channel];
  }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const ImageTensor&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Pixel coordinates: x is the column, y the row; (0,0) is the centre of the
/// top-left pixel.
struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Four tongue corners ordered top-left, top-right, bottom-right, bottom-left.
struct BoundingQuad {
  std::array<Point, 4> corners{};

  /// Signed shoelace area; positive for the TL,TR,BR,BL order in image
  /// coordinates (y grows downwards).
  double signed_area() const noexcept;
  double area() const noexcept;
  /// Area below 1e-6 of the bounding-box area (or a zero-size box).
  bool degenerate() const noexcept;

  /// Throws ValidationError when a corner lies outside a height x width
  /// image or the polygon has (near) zero area.
  void validate(int height, int width) const;

  bool operator==(const BoundingQuad&) const = default;
};

enum class Label : int { healthy = 0, patient = 1 };
enum class Split : int { train = 0, test = 1 };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Split split) noexcept;
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);

/// +1 for patient (the positive class), -1 for healthy.
inline int signed_label(Label label) noexcept { return label == Label::patient ? 1 : -1; }
inline int target_of(Label label) noexcept { return static_cast<int>(label); }

struct Dims {
  int height = 0;
  int width = 0;
  bool operator==(const Dims&) const = default;
};

/// Canonical frame every sample is registered onto.
struct ReferenceModel {
  Dims dims{512, 512};
  BoundingQuad quad{{{{96, 96}, {416, 96}, {416, 416}, {96, 416}}}};
};

struct LabeledSample {
  std::string image_id;
  std::string path;  // resolved against the manifest directory
  Label label = Label::healthy;
  std::optional<BoundingQuad> quad;
  Split split = Split::train;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  BoundingQuad reference_quad = ReferenceModel{}.quad;
  Dims reference_dims = ReferenceModel{}.dims;

  ReferenceModel reference() const { return {reference_dims, reference_quad}; }
  std::size_t count(Split split) const noexcept;
  std::size_t count(Split split, Label label) const noexcept;
  /// Throws ValidationError unless each class has a sample in each split.
  void require_both_classes_per_split() const;
};

/// Seeded pseudo-random stream. The generator is the 64-bit Mersenne Twister
/// (std::mt19937_64, whose output sequence is fixed by the C++ standard); the
/// derived distributions below are computed here rather than through
/// <random> distributions, whose algorithms vary between standard libraries.
/// Identical seeds therefore produce bit-identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n) by rejection (n > 0).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via the Box-Muller transform.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Independent child stream; the same (seed, tag) pair always gives the same child.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) noexcept;

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

/// 64-bit FNV-1a; used for content and configuration hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t value);

}  // namespace tongue
