#include "tongue/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "tongue/checkpoint.hpp"
#include "tongue/image_io.hpp"
#include "tongue/manifest.hpp"

namespace tongue {

void SynthSpec::validate() const {
  if (n_per_class <= 0) throw ValidationError("n_per_class must be positive");
  if (!(separation >= 0.0 && separation <= 1.0)) throw ValidationError("separation must lie in [0,1]");
  if (!(pose_jitter >= 0.0 && pose_jitter <= 1.0)) throw ValidationError("pose_jitter must lie in [0,1]");
  if (image_dims.height <= 0 || image_dims.width <= 0) throw ValidationError("image dims must be positive");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction must lie in [0,1)");
}

namespace {

using Rgb = std::array<double, 3>;

constexpr Rgb kSkin{0.90, 0.76, 0.66};
constexpr Rgb kMouth{0.20, 0.06, 0.06};
constexpr Rgb kHealthyTongue{0.80, 0.33, 0.38};
constexpr Rgb kPatientTongue{0.72, 0.50, 0.30};
constexpr Rgb kCoating{0.88, 0.80, 0.58};
constexpr Rgb kShadow{0.55, 0.20, 0.24};

struct Blob {
  Point centre;
  double sigma;
};

struct Ellipse {
  Point centre;
  double rx, ry;
  double norm(Point q) const noexcept {
    const double dx = (q.x - centre.x) / rx, dy = (q.y - centre.y) / ry;
    return dx * dx + dy * dy;
  }
};

Ellipse tongue_ellipse(const ReferenceModel& ref, double shrink = 1.0) {
  double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
  for (const auto& c : ref.quad.corners) {
    minx = std::min(minx, c.x);
    maxx = std::max(maxx, c.x);
    miny = std::min(miny, c.y);
    maxy = std::max(maxy, c.y);
  }
  return {{(minx + maxx) / 2, (miny + maxy) / 2}, shrink * (maxx - minx) / 2, shrink * (maxy - miny) / 2};
}

AffineTransform draw_pose(Rng& rng, double jitter, Dims dims) {
  const double cx = (dims.width - 1) / 2.0, cy = (dims.height - 1) / 2.0;
  const double theta = rng.uniform(-0.12, 0.12) * jitter;
  const double sx = 1.0 + rng.uniform(-0.08, 0.08) * jitter;
  const double sy = 1.0 + rng.uniform(-0.08, 0.08) * jitter;
  const double shear = rng.uniform(-0.04, 0.04) * jitter;
  const double tx = rng.uniform(-20.0, 20.0) * jitter;
  const double ty = rng.uniform(-20.0, 20.0) * jitter;
  const double c = std::cos(theta), s = std::sin(theta);
  // R * Shear * Scale about the image centre, then translate
  const AffineTransform linear{c * sx, (c * shear - s) * sy, 0.0, s * sx, (s * shear + c) * sy, 0.0};
  AffineTransform t = compose(AffineTransform::translation(cx + tx, cy + ty),
                              compose(linear, AffineTransform::translation(-cx, -cy)));
  return t;
}

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

double blob_field(const std::vector<Blob>& blobs, Point q) {
  double s = 0.0;
  for (const auto& b : blobs) {
    const double dx = q.x - b.centre.x, dy = q.y - b.centre.y;
    s += std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
  }
  return std::min(s, 1.0);
}

std::vector<Blob> draw_blobs(Rng& rng, const Ellipse& tongue, int count, double lo, double hi) {
  std::vector<Blob> blobs;
  for (int k = 0; k < count; ++k) {
    const double r = 0.6 * std::sqrt(rng.uniform());
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    blobs.push_back({{tongue.centre.x + r * tongue.rx * std::cos(a), tongue.centre.y + r * tongue.ry * std::sin(a)},
                     rng.uniform(lo, hi)});
  }
  return blobs;
}

}  // namespace

SynthSample render_synthetic(const SynthSpec& spec, Label label, std::size_t index, const ReferenceModel& ref) {
  spec.validate();
  Rng rng(Rng::derive(spec.seed, (static_cast<std::uint64_t>(label) << 32) + index));
  const Dims dims = spec.image_dims;

  SynthSample out;
  out.label = label;
  out.pose = draw_pose(rng, spec.pose_jitter, dims);
  for (std::size_t j = 0; j < 4; ++j) out.quad.corners[j] = apply_point(out.pose, ref.quad.corners[j]);
  const AffineTransform to_ref = invert(out.pose);

  const Ellipse tongue = tongue_ellipse(ref);
  const Ellipse mouth{tongue.centre, tongue.rx * 1.12, tongue.ry * 1.12};
  const Ellipse face{{(ref.dims.width - 1) / 2.0, tongue.centre.y - 0.04 * ref.dims.height},
                     0.46 * ref.dims.width, 0.49 * ref.dims.height};

  // The class-dependent draws come last so that, at separation 0, both
  // classes consume the generator identically up to the label itself.
  const double illumination = rng.uniform(0.92, 1.05);
  Rgb base = label == Label::patient ? lerp(kHealthyTongue, kPatientTongue, spec.separation) : kHealthyTongue;
  for (double& v : base) v += rng.normal(0.0, 0.03);
  const auto shadows = draw_blobs(rng, tongue, 3, 25.0, 50.0);
  const auto coating = draw_blobs(rng, tongue, 6, 18.0, 40.0);
  const double coat_amount = label == Label::patient ? 0.6 * spec.separation : 0.0;

  std::vector<double> data(static_cast<std::size_t>(dims.height) * dims.width * 3);
  std::size_t k = 0;
  for (int v = 0; v < dims.height; ++v) {
    for (int u = 0; u < dims.width; ++u) {
      const Point q = apply_point(to_ref, {static_cast<double>(u), static_cast<double>(v)});
      Rgb color{0.0, 0.0, 0.0};
      double noise = 0.0;
      if (tongue.norm(q) <= 1.0) {
        color = lerp(base, kShadow, 0.35 * blob_field(shadows, q));
        color = lerp(color, kCoating, coat_amount * blob_field(coating, q));
        noise = 0.025;
      } else if (mouth.norm(q) <= 1.0) {
        color = kMouth;
        noise = 0.01;
      } else if (face.norm(q) <= 1.0) {
        color = kSkin;
        noise = 0.015;
      }
      for (int ch = 0; ch < 3; ++ch) {
        const double n = noise > 0.0 ? rng.normal(0.0, noise) : 0.0;
        data[k++] = std::clamp(color[ch] * illumination + n, 0.0, 1.0);
      }
    }
  }
  out.image = ImageTensor(dims.height, dims.width, 3, std::move(data));
  return out;
}

std::vector<bool> tongue_mask(const AffineTransform& pose, Dims dims, const ReferenceModel& ref, double shrink) {
  const AffineTransform to_ref = invert(pose);
  const Ellipse tongue = tongue_ellipse(ref, shrink);
  std::vector<bool> mask(static_cast<std::size_t>(dims.height) * dims.width);
  for (int v = 0; v < dims.height; ++v)
    for (int u = 0; u < dims.width; ++u)
      mask[static_cast<std::size_t>(v) * dims.width + u] =
          tongue.norm(apply_point(to_ref, {static_cast<double>(u), static_cast<double>(v)})) <= 1.0;
  return mask;
}

double hue_degrees(double r, double g, double b) noexcept {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  if (d <= 0.0) return 0.0;
  double h;
  if (mx == r) h = 60.0 * std::fmod((g - b) / d, 6.0);
  else if (mx == g) h = 60.0 * ((b - r) / d + 2.0);
  else h = 60.0 * ((r - g) / d + 4.0);
  return h < 0.0 ? h + 360.0 : h;
}

double mean_hue(const ImageTensor& image, const std::vector<bool>& mask) {
  if (image.channels() != 3) throw ShapeError("mean_hue needs an RGB image");
  if (mask.size() != static_cast<std::size_t>(image.height()) * image.width())
    throw ShapeError("mask does not match the image");
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < image.height(); ++r)
    for (int c = 0; c < image.width(); ++c) {
      if (!mask[static_cast<std::size_t>(r) * image.width() + c]) continue;
      const double h = hue_degrees(image.at(r, c, 0), image.at(r, c, 1), image.at(r, c, 2)) * std::numbers::pi / 180.0;
      sx += std::cos(h);
      sy += std::sin(h);
      ++n;
    }
  if (n == 0) throw ValidationError("mean_hue over an empty mask");
  double h = std::atan2(sy, sx) * 180.0 / std::numbers::pi;
  return h < 0.0 ? h + 360.0 : h;
}

Dataset synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir, const ReferenceModel& ref) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

  Dataset ds;
  ds.reference_dims = ref.dims;
  ds.reference_quad = ref.quad;
  const auto n_test = static_cast<std::size_t>(std::lround(spec.test_fraction * spec.n_per_class));
  for (Label label : {Label::healthy, Label::patient}) {
    std::vector<std::size_t> order(spec.n_per_class);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(Rng::derive(spec.seed, 0x73706c6974ULL + static_cast<std::uint64_t>(label)));
    split_rng.shuffle(order);
    std::vector<bool> is_test(spec.n_per_class, false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

    for (int i = 0; i < spec.n_per_class; ++i) {
      const SynthSample s = render_synthetic(spec, label, static_cast<std::size_t>(i), ref);
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04d", std::string(to_string(label)).c_str(), i);
      const auto path = out_dir / "images" / (std::string(id) + ".png");
      save_image(s.image, path);
      ds.samples.push_back({id, path.string(), label, s.quad, is_test[i] ? Split::test : Split::train});
    }
  }

  std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + (out_dir / "manifest.jsonl").string());
  write_manifest(ds, manifest, out_dir);

  nlohmann::json quad = nlohmann::json::array();
  for (const auto& c : ref.quad.corners) quad.push_back({c.x, c.y});
  write_json({{"reference_dims", {ref.dims.height, ref.dims.width}}, {"reference_quad", quad}},
             out_dir / "reference.json");
  return ds;
}

}  // namespace tongue
