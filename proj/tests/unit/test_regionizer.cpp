#include <gtest/gtest.h>

#include "tongue/errors.hpp"
#include "tongue/regionizer.hpp"

using namespace tongue;

namespace {
ImageTensor ramp(int h, int w, int c = 1) {
  std::vector<double> d(static_cast<std::size_t>(h) * w * c);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>((i * 7919) % 1000) / 999.0;
  return ImageTensor(h, w, c, std::move(d));
}
ImageTensor with_pixel(int h, int w, int r, int c, double v) {
  std::vector<double> d(static_cast<std::size_t>(h) * w, 0.0);
  d[r * w + c] = v;
  return ImageTensor(h, w, 1, std::move(d));
}
}  // namespace

TEST(Crop, ConstantAndOffset) {
  const ImageTensor k(512, 512, 3, std::vector<double>(512 * 512 * 3, 0.4));
  const auto out = crop_margins(k);
  EXPECT_EQ(out.height(), 400);
  EXPECT_EQ(out.width(), 400);
  for (double v : out.data()) EXPECT_EQ(v, 0.4);
  EXPECT_EQ(crop_margins(with_pixel(512, 512, 56, 56, 0.8)).at(0, 0, 0), 0.8);
  EXPECT_THROW(crop_margins(ImageTensor(500, 512, 1)), ShapeError);
}

TEST(Crop, PadInverse) {
  const ImageTensor img = ramp(400, 400, 3);
  EXPECT_EQ(crop_margins(pad(img, 56)), img);
}

TEST(Regions, ConstantAndShape) {
  const ImageTensor k(400, 400, 1, std::vector<double>(400 * 400, 0.2));
  const auto set = split_regions(k);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(set[i].height(), 200);
    EXPECT_EQ(set[i].width(), 200);
    EXPECT_EQ(set[i], set[0]);
  }
}

TEST(Regions, SharedCentre) {
  const auto set = split_regions(with_pixel(400, 400, 100, 100, 0.9));
  EXPECT_EQ(set[4].at(0, 0, 0), 0.9);
  EXPECT_EQ(set[0].at(100, 100, 0), 0.9);
}

TEST(Regions, TileReassembly) {
  const ImageTensor img = ramp(400, 400, 3);
  const auto set = split_regions(img);
  for (int r = 0; r < 400; ++r)
    for (int c = 0; c < 400; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const int q = (r >= 200 ? 2 : 0) + (c >= 200 ? 1 : 0);
        ASSERT_EQ(set[q].at(r % 200, c % 200, ch), img.at(r, c, ch));
        if (r >= 100 && r < 300 && c >= 100 && c < 300) {
          ASSERT_EQ(set[4].at(r - 100, c - 100, ch), img.at(r, c, ch));
        }
      }
  EXPECT_THROW(split_regions(ImageTensor(512, 512, 1)), ShapeError);
}

TEST(Resize, ConstantPreserved) {
  const ImageTensor k(200, 200, 1, std::vector<double>(200 * 200, 0.5));
  const auto out = resize(k, 32, 32);
  EXPECT_EQ(out.height(), 32);
  for (double v : out.data()) EXPECT_EQ(v, 0.5);
}

TEST(Resize, HandEvaluatedKernel) {
  const ImageTensor img(2, 2, 1, {0, 1, 0, 1});
  const auto out = resize(img, 1, 2);
  EXPECT_EQ(out.at(0, 0, 0), 0.0);
  EXPECT_EQ(out.at(0, 1, 0), 1.0);
}

TEST(Resize, RangePreserved) {
  const ImageTensor img = ramp(200, 200, 3);
  const auto mm = std::minmax_element(img.data().begin(), img.data().end());
  for (auto [h, w] : {std::pair{32, 32}, {30, 30}, {7, 13}, {300, 250}}) {
    const auto out = resize(img, h, w);
    for (double v : out.data()) {
      EXPECT_GE(v, *mm.first - 1e-12);
      EXPECT_LE(v, *mm.second + 1e-12);
    }
  }
}

TEST(Resize, RegionSizes) {
  const auto set = resize_regions(split_regions(ramp(400, 400, 3)));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(set[i].height(), 32);
  EXPECT_EQ(set[4].height(), 30);
  EXPECT_EQ(set[4].width(), 30);
}

TEST(Vectorize, LayoutAndLength) {
  const ImageTensor k(32, 32, 3, std::vector<double>(32 * 32 * 3, 0.3));
  const auto v = vectorize_channel(k, 0);
  ASSERT_EQ(v.size(), 1024u);
  for (double x : v) EXPECT_EQ(x, 0.3);
  const auto w = vectorize_channel(with_pixel(32, 32, 0, 1, 0.9), 0);
  EXPECT_EQ(w[1], 0.9);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_THROW(vectorize_channel(k, 3), ValidationError);
}
