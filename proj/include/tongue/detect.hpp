#pragma once

#include "tongue/core.hpp"

namespace tongue {

class DetectionError : public DegeneracyError {
 public:
  using DegeneracyError::DegeneracyError;
};

/// Thresholds of the tongue colour gate in HSV space. The hue window wraps
/// through 0 (red).
struct DetectOptions {
  double hue_low = 330.0;   // degrees
  double hue_high = 45.0;   // degrees, wrapping
  double min_saturation = 0.40;
  double min_value = 0.35;
  std::size_t min_area = 2000;
};

/// Axis-aligned bounding box of the largest 4-connected component passing
/// the colour gate, as corners TL,TR,BR,BL at pixel centres. Throws
/// DetectionError when no component reaches `min_area`. Intended for the
/// synthetic corpus; manifest quads take precedence for real images.
BoundingQuad detect_quad_heuristic(const ImageTensor& image, const DetectOptions& options = {});

/// IoU of the axis-aligned bounding rectangles of two quads.
double quad_iou(const BoundingQuad& a, const BoundingQuad& b);

}  // namespace tongue
