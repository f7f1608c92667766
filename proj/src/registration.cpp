#include "tongue/registration.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace tongue {

NormalSystem normal_system(const BoundingQuad& moving, const BoundingQuad& reference, int row) {
  if (row != 0 && row != 1) throw DomainError("normal_system row must be 0 or 1");
  NormalSystem sys;
  for (std::size_t j = 0; j < 4; ++j) {
    const Point& r = reference.corners[j];
    const double h[3] = {r.x, r.y, 1.0};
    const double target = row == 0 ? moving.corners[j].x : moving.corners[j].y;
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) sys.a[p][q] += h[p] * h[q];
      sys.b[p] += target * h[p];
    }
  }
  return sys;
}

std::array<double, 3> solve_normal_system(const NormalSystem& system) {
  auto a = system.a;
  auto b = system.b;
  double scale = 0.0;
  for (const auto& r : a)
    for (double v : r) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) throw DegeneracyError("normal matrix is zero");

  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) <= 1e-12 * scale)
      throw DegeneracyError("normal matrix is singular: reference corners are collinear");
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

AffineTransform fit_affine(const BoundingQuad& moving, const BoundingQuad& reference) {
  if (reference.degenerate()) throw DegeneracyError("reference quad is degenerate");
  if (moving.degenerate()) throw DegeneracyError("moving quad is degenerate");

  // Centre the reference points: the Gram matrix of raw pixel coordinates
  // has entries ~1e6 next to the constant 4, and centring keeps the solve
  // well conditioned without changing the minimiser.
  Point centre{};
  for (const auto& c : reference.corners) {
    centre.x += c.x / 4.0;
    centre.y += c.y / 4.0;
  }
  BoundingQuad centred = reference;
  for (auto& c : centred.corners) {
    c.x -= centre.x;
    c.y -= centre.y;
  }
  const auto row_x = solve_normal_system(normal_system(moving, centred, 0));
  const auto row_y = solve_normal_system(normal_system(moving, centred, 1));

  AffineTransform t;
  t.t11 = row_x[0];
  t.t12 = row_x[1];
  t.t13 = row_x[2] - row_x[0] * centre.x - row_x[1] * centre.y;
  t.t21 = row_y[0];
  t.t22 = row_y[1];
  t.t23 = row_y[2] - row_y[0] * centre.x - row_y[1] * centre.y;
  return t;
}

double fit_residual(const AffineTransform& t, const BoundingQuad& moving,
                    const BoundingQuad& reference) noexcept {
  double sum = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    const Point p = apply_point(t, reference.corners[j]);
    const double dx = moving.corners[j].x - p.x;
    const double dy = moving.corners[j].y - p.y;
    sum += dx * dx + dy * dy;
  }
  return sum;
}

AffineTransform invert(const AffineTransform& t) {
  const double det = t.determinant();
  if (!(std::abs(det) > kMinDeterminant))
    throw DegeneracyError("affine transform is not invertible (det = " + std::to_string(det) + ")");
  AffineTransform inv;
  inv.t11 = t.t22 / det;
  inv.t12 = -t.t12 / det;
  inv.t21 = -t.t21 / det;
  inv.t22 = t.t11 / det;
  inv.t13 = -(inv.t11 * t.t13 + inv.t12 * t.t23);
  inv.t23 = -(inv.t21 * t.t13 + inv.t22 * t.t23);
  return inv;
}

AffineTransform compose(const AffineTransform& outer, const AffineTransform& inner) noexcept {
  AffineTransform r;
  r.t11 = outer.t11 * inner.t11 + outer.t12 * inner.t21;
  r.t12 = outer.t11 * inner.t12 + outer.t12 * inner.t22;
  r.t13 = outer.t11 * inner.t13 + outer.t12 * inner.t23 + outer.t13;
  r.t21 = outer.t21 * inner.t11 + outer.t22 * inner.t21;
  r.t22 = outer.t21 * inner.t12 + outer.t22 * inner.t22;
  r.t23 = outer.t21 * inner.t13 + outer.t22 * inner.t23 + outer.t23;
  return r;
}

Point apply_point(const AffineTransform& t, Point p) noexcept {
  return {t.t11 * p.x + t.t12 * p.y + t.t13, t.t21 * p.x + t.t22 * p.y + t.t23};
}

ImageTensor warp_to_reference(const ImageTensor& image, const AffineTransform& t, Dims out_dims) {
  if (image.empty()) throw ShapeError("cannot warp an empty image");
  if (out_dims.height <= 0 || out_dims.width <= 0) throw ShapeError("warp output dims must be positive");
  if (!(std::abs(t.determinant()) > kMinDeterminant))
    throw DegeneracyError("warp transform is not invertible");

  const int h = image.height(), w = image.width(), nc = image.channels();
  const auto src = image.data();
  std::vector<double> out(static_cast<std::size_t>(out_dims.height) * out_dims.width * nc, 0.0);

  auto tap = [&](int row, int col, int ch) -> double {
    if (row < 0 || row >= h || col < 0 || col >= w) return 0.0;
    return src[(static_cast<std::size_t>(row) * w + col) * nc + ch];
  };

  std::size_t k = 0;
  for (int v = 0; v < out_dims.height; ++v) {
    for (int u = 0; u < out_dims.width; ++u) {
      const Point s = apply_point(t, {static_cast<double>(u), static_cast<double>(v)});
      const double fx0 = std::floor(s.x), fy0 = std::floor(s.y);
      if (fx0 < -1.0 || fy0 < -1.0 || fx0 >= w || fy0 >= h) {
        k += nc;
        continue;
      }
      const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
      const double fx = s.x - fx0, fy = s.y - fy0;
      for (int ch = 0; ch < nc; ++ch) {
        const double a = tap(y0, x0, ch), b = tap(y0, x0 + 1, ch);
        const double c = tap(y0 + 1, x0, ch), d = tap(y0 + 1, x0 + 1, ch);
        const double top = a + fx * (b - a);
        const double bottom = c + fx * (d - c);
        out[k++] = std::clamp(top + fy * (bottom - top), 0.0, 1.0);
      }
    }
  }
  return ImageTensor(out_dims.height, out_dims.width, nc, std::move(out));
}

Registration register_image(const ImageTensor& image, const BoundingQuad& quad,
                            const ReferenceModel& reference) {
  if (quad.degenerate()) throw DegeneracyError("sample quad is degenerate (zero area)");
  quad.validate(image.height(), image.width());
  const AffineTransform t = fit_affine(quad, reference.quad);
  // the inverse is the sample -> reference map; computing it checks invertibility
  (void)invert(t);
  Registration reg{warp_to_reference(image, t, reference.dims), t, fit_residual(t, quad, reference.quad)};
  return reg;
}

ImageTensor register_sample(const ImageTensor& image, const BoundingQuad& quad,
                            const Dataset& dataset) {
  return register_image(image, quad, dataset.reference()).image;
}

}  // namespace tongue
