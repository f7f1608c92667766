#include "tongue/detect.hpp"

#include <algorithm>
#include <vector>

#include "tongue/synth.hpp"

namespace tongue {

BoundingQuad detect_quad_heuristic(const ImageTensor& image, const DetectOptions& opt) {
  if (image.channels() != 3) throw ShapeError("tongue detection needs an RGB image");
  const int h = image.height(), w = image.width();
  std::vector<unsigned char> gate(static_cast<std::size_t>(h) * w, 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double R = image.at(r, c, 0), G = image.at(r, c, 1), B = image.at(r, c, 2);
      const double mx = std::max({R, G, B}), mn = std::min({R, G, B});
      if (mx < opt.min_value || mx <= 0.0 || (mx - mn) / mx < opt.min_saturation) continue;
      const double hue = hue_degrees(R, G, B);
      const bool in_window = opt.hue_low <= opt.hue_high ? (hue >= opt.hue_low && hue <= opt.hue_high)
                                                         : (hue >= opt.hue_low || hue <= opt.hue_high);
      gate[static_cast<std::size_t>(r) * w + c] = in_window;
    }

  struct Box {
    std::size_t area = 0;
    int minx = 0, maxx = 0, miny = 0, maxy = 0;
  } best;
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (gate[start] != 1) continue;
    Box box{0, w, -1, h, -1};
    gate[start] = 2;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int r = p / w, c = p % w;
      ++box.area;
      box.minx = std::min(box.minx, c);
      box.maxx = std::max(box.maxx, c);
      box.miny = std::min(box.miny, r);
      box.maxy = std::max(box.maxy, r);
      const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
        const int q = n[0] * w + n[1];
        if (gate[q] == 1) {
          gate[q] = 2;
          stack.push_back(q);
        }
      }
    }
    if (box.area > best.area) best = box;
  }
  if (best.area < opt.min_area || best.maxx <= best.minx || best.maxy <= best.miny)
    throw DetectionError("no tongue-coloured component of at least " + std::to_string(opt.min_area) + " pixels");
  const double x0 = best.minx, x1 = best.maxx, y0 = best.miny, y1 = best.maxy;
  return BoundingQuad{{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}}};
}

double quad_iou(const BoundingQuad& a, const BoundingQuad& b) {
  auto bounds = [](const BoundingQuad& q) {
    std::array<double, 4> r{1e300, 1e300, -1e300, -1e300};
    for (const auto& c : q.corners) {
      r[0] = std::min(r[0], c.x);
      r[1] = std::min(r[1], c.y);
      r[2] = std::max(r[2], c.x);
      r[3] = std::max(r[3], c.y);
    }
    return r;
  };
  const auto A = bounds(a), B = bounds(b);
  const double iw = std::max(0.0, std::min(A[2], B[2]) - std::max(A[0], B[0]));
  const double ih = std::max(0.0, std::min(A[3], B[3]) - std::max(A[1], B[1]));
  const double inter = iw * ih;
  const double uni = (A[2] - A[0]) * (A[3] - A[1]) + (B[2] - B[0]) * (B[3] - B[1]) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace tongue
