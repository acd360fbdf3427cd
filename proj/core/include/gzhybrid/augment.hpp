#pragma once

#include <utility>

#include "gzhybrid/image.hpp"
#include "gzhybrid/rng.hpp"

namespace gzhybrid {

// Parameters for one augmentation policy. The standard policy (flips,
// rotations, non-central crops) ignores the jitter/blur fields; the strong
// contrastive policy applies all of them.
struct AugmentPolicy {
  double rotation_min_deg = 0.0;
  double rotation_max_deg = 360.0;
  double crop_scale_min = 0.7;  // fraction of source area
  double crop_scale_max = 1.0;
  double flip_p = 0.5;
  double jitter_strength = 0.0;  // brightness/contrast scale within +/- s
  double blur_p = 0.0;
  int out_size = 64;

  static AugmentPolicy standard_defaults(int out_size);
  static AugmentPolicy strong_defaults(int out_size);
  void validate() const;
};

// One draw of the standard supervised policy: random horizontal/vertical
// flips, uniform rotation, non-central crop resampled to out_size. Pure given
// the rng stream; output values stay in [0, 1].
Image standard_view(const Image& image, const AugmentPolicy& policy, Rng& rng);

// Two independent draws of the strong contrastive policy: the standard
// transforms plus color jitter and optional Gaussian blur. With jitter
// strength 0 and blur probability 0 this consumes exactly the same draws as
// standard_view, so the strong policy degenerates to the standard one.
std::pair<Image, Image> strong_views(const Image& image, const AugmentPolicy& policy,
                                     Rng& rng);

}  // namespace gzhybrid
