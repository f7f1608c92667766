#pragma once

#include <array>

#include "tongue/core.hpp"

namespace tongue {

/// Planar affine map  x' = t11 x + t12 y + t13,  y' = t21 x + t22 y + t23.
/// The implied third row is [0 0 1].
struct AffineTransform {
  double t11 = 1.0, t12 = 0.0, t13 = 0.0;
  double t21 = 0.0, t22 = 1.0, t23 = 0.0;

  static AffineTransform identity() noexcept { return {}; }
  static AffineTransform translation(double dx, double dy) noexcept {
    return {1.0, 0.0, dx, 0.0, 1.0, dy};
  }
  double determinant() const noexcept { return t11 * t22 - t12 * t21; }
  std::array<double, 6> params() const noexcept { return {t11, t12, t13, t21, t22, t23}; }

  bool operator==(const AffineTransform&) const = default;
};

/// Minimum |det| of the linear block accepted as invertible.
inline constexpr double kMinDeterminant = 1e-12;

/// Normal equations for one output coordinate: a * [t_k1 t_k2 t_k3]^T = b,
/// where a is the Gram matrix of the homogeneous reference points.
struct NormalSystem {
  std::array<std::array<double, 3>, 3> a{};
  std::array<double, 3> b{};
};

/// Builds the system obtained by zeroing the partial derivatives of the
/// squared correspondence error with respect to row `row` (0 = x, 1 = y).
NormalSystem normal_system(const BoundingQuad& moving, const BoundingQuad& reference, int row);

/// Gaussian elimination with partial pivoting. Throws DegeneracyError when
/// the Gram matrix is singular (collinear reference corners).
std::array<double, 3> solve_normal_system(const NormalSystem& system);

/// Least-squares T minimising sum_j |moving_j - T [reference_j; 1]|^2 over the
/// four corners. The x and y rows are solved as independent 3x3 systems.
AffineTransform fit_affine(const BoundingQuad& moving, const BoundingQuad& reference);

/// Sum of squared corner residuals of `t` mapping reference onto moving.
double fit_residual(const AffineTransform& t, const BoundingQuad& moving,
                    const BoundingQuad& reference) noexcept;

AffineTransform invert(const AffineTransform& t);
AffineTransform compose(const AffineTransform& outer, const AffineTransform& inner) noexcept;
Point apply_point(const AffineTransform& t, Point p) noexcept;

/// Output pixel (u, v) takes the bilinear sample of `image` at
/// apply_point(t, (u, v)); `t` maps output coordinates into the source.
/// Bilinear taps that fall outside the source contribute zero.
ImageTensor warp_to_reference(const ImageTensor& image, const AffineTransform& t, Dims out_dims);

struct Registration {
  ImageTensor image;
  AffineTransform transform;  // reference frame -> sample frame
  double residual = 0.0;
};

/// Fits T from the sample quad to the reference quad and resamples the image
/// into the reference frame, so that T^-1 carries each sample corner onto its
/// reference corner.
Registration register_image(const ImageTensor& image, const BoundingQuad& quad,
                            const ReferenceModel& reference);

ImageTensor register_sample(const ImageTensor& image, const BoundingQuad& quad,
                            const Dataset& dataset);

}  // namespace tongue
