#include "tongue/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numbers>

namespace tongue {

ImageTensor::ImageTensor(int height, int width, int channels)
    : ImageTensor(height, width, channels,
                  std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                      std::max(width, 0) * std::max(channels, 0))) {}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0)
    throw ShapeError("image dimensions must be positive, got " + std::to_string(height) + "x" +
                     std::to_string(width));
  if (channels != 1 && channels != 3)
    throw ShapeError("image channel count must be 1 or 3, got " + std::to_string(channels));
  const auto expected = static_cast<std::size_t>(height) * width * channels;
  if (data_.size() != expected)
    throw ShapeError("image buffer holds " + std::to_string(data_.size()) + " values, expected " +
                     std::to_string(expected));
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError("image intensity outside [0,1]: " + std::to_string(v));
  }
}

double BoundingQuad::signed_area() const noexcept {
  double twice = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point& a = corners[i];
    const Point& b = corners[(i + 1) % 4];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

double BoundingQuad::area() const noexcept { return std::abs(signed_area()); }

bool BoundingQuad::degenerate() const noexcept {
  double x0 = corners[0].x, x1 = x0, y0 = corners[0].y, y1 = y0;
  for (const auto& p : corners) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double box = (x1 - x0) * (y1 - y0);
  return !(box > 0.0) || area() <= 1e-6 * box;
}

void BoundingQuad::validate(int height, int width) const {
  for (const Point& p : corners) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.y < 0.0 ||
        p.x > width - 1.0 || p.y > height - 1.0)
      throw ValidationError("quad corner (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                            ") lies outside a " + std::to_string(height) + "x" +
                            std::to_string(width) + " image");
  }
  if (degenerate()) throw ValidationError("quad is degenerate (zero area)");
}

std::string_view to_string(Label label) noexcept {
  return label == Label::patient ? "patient" : "healthy";
}

std::string_view to_string(Split split) noexcept { return split == Split::test ? "test" : "train"; }

Label parse_label(std::string_view text) {
  if (text == "healthy") return Label::healthy;
  if (text == "patient") return Label::patient;
  throw ValidationError("unknown label '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(text) + "'");
}

std::size_t Dataset::count(Split split) const noexcept {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.split == split;
  return n;
}

std::size_t Dataset::count(Split split, Label label) const noexcept {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.split == split && s.label == label;
  return n;
}

void Dataset::require_both_classes_per_split() const {
  for (Split split : {Split::train, Split::test})
    for (Label label : {Label::healthy, Label::patient})
      if (count(split, label) == 0)
        throw ValidationError("dataset has no " + std::string(to_string(label)) + " samples in the " +
                              std::string(to_string(split)) + " split");
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw DomainError("Rng::below requires n > 0");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (spare_normal_) {
    double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t tag) noexcept {
  // splitmix64 finaliser over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace tongue
