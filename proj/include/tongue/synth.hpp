#pragma once

#include <filesystem>
#include <vector>

#include "tongue/core.hpp"
#include "tongue/registration.hpp"

namespace tongue {

/// Parameters of the synthetic two-class tongue corpus.
struct SynthSpec {
  int n_per_class = 50;
  double separation = 1.0;   // 0 = identically distributed classes
  double pose_jitter = 0.0;  // 0..1 scales rotation/scale/shear/translation of the pose
  Dims image_dims{512, 512};
  std::uint64_t seed = 0;
  double test_fraction = 0.25;  // per class, rounded to the nearest integer

  void validate() const;
};

struct SynthSample {
  ImageTensor image;
  BoundingQuad quad;       // tongue corners in the image
  AffineTransform pose;    // reference frame -> image frame
  Label label = Label::healthy;
};

/// Renders sample `index` of class `label`: a face-like background with an
/// elliptical tongue inscribed in the posed reference quad. Patients get a
/// yellowish hue shift and whitish coating blobs, both scaled by
/// `separation`. Pure function of (spec, label, index, reference).
SynthSample render_synthetic(const SynthSpec& spec, Label label, std::size_t index,
                             const ReferenceModel& reference = {});

/// Writes images/<id>.png, manifest.jsonl and reference.json under `out_dir`
/// and returns the dataset (healthy samples first, then patients).
Dataset synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir,
                       const ReferenceModel& reference = {});

/// Pixels whose reference-frame position falls inside the tongue ellipse
/// shrunk by `shrink` (1 = full tongue).
std::vector<bool> tongue_mask(const AffineTransform& pose, Dims dims, const ReferenceModel& reference,
                              double shrink = 1.0);

/// HSV hue in degrees [0, 360) of an RGB triple; 0 for grey.
double hue_degrees(double r, double g, double b) noexcept;
/// Circular mean hue (degrees) over the masked pixels of an RGB image.
double mean_hue(const ImageTensor& image, const std::vector<bool>& mask);

}  // namespace tongue
