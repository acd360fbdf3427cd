#include "gzhybrid/augment.hpp"

#include <cmath>

#include "gzhybrid/errors.hpp"

namespace gzhybrid {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBlurSigmaMin = 0.3;
constexpr double kBlurSigmaMax = 1.2;

Image gaussian_blur(const Image& src, double sigma) {
  const int radius = std::max(1, int(std::ceil(2.0 * sigma)));
  std::vector<double> kernel(std::size_t(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[std::size_t(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[std::size_t(i + radius)];
  }
  for (auto& k : kernel) k /= sum;

  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
  };

  Image tmp(src.channels, src.height, src.width);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[std::size_t(i + radius)] * src.at(c, y, reflect(x + i, src.width));
        tmp.at(c, y, x) = float(acc);
      }
  Image out(src.channels, src.height, src.width);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[std::size_t(i + radius)] * tmp.at(c, reflect(y + i, src.height), x);
        out.at(c, y, x) = float(acc);
      }
  return out;
}

void clamp01(Image& img) {
  for (auto& v : img.px) {
    if (v < 0.0f) v = 0.0f;
    if (v > 1.0f) v = 1.0f;
  }
}

// Geometry shared by both policies: flips, rotation and a non-central crop
// folded into a single bilinear resample.
Image geometric_view(const Image& image, const AugmentPolicy& policy, Rng& rng) {
  const bool flip_h = rng.bernoulli(policy.flip_p);
  const bool flip_v = rng.bernoulli(policy.flip_p);
  const double angle =
      rng.uniform(policy.rotation_min_deg, policy.rotation_max_deg) * kPi / 180.0;
  const double scale = rng.uniform(policy.crop_scale_min, policy.crop_scale_max);

  const int side = std::min(image.height, image.width);
  const double crop_side = std::max(2.0, double(side) * std::sqrt(scale));
  const double half = 0.5 * crop_side;
  const double cy_lo = half, cy_hi = double(image.height) - half;
  const double cx_lo = half, cx_hi = double(image.width) - half;
  const double ccy = cy_lo >= cy_hi ? 0.5 * (image.height - 1) : rng.uniform(cy_lo, cy_hi);
  const double ccx = cx_lo >= cx_hi ? 0.5 * (image.width - 1) : rng.uniform(cx_lo, cx_hi);

  if (image.height < policy.out_size / 4 || image.width < policy.out_size / 4 ||
      crop_side < 2.0)
    throw DataError("augment: image too small for the configured crop");

  // Output pixel -> crop frame (scaled) -> rotated/flipped source frame.
  const double step = crop_side / double(policy.out_size);
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double fx = flip_h ? -1.0 : 1.0;
  const double fy = flip_v ? -1.0 : 1.0;
  Affine2 map;
  map.a00 = ca * fx * step;
  map.a01 = -sa * fy * step;
  map.a10 = sa * fx * step;
  map.a11 = ca * fy * step;
  map.cx = ccx;
  map.cy = ccy;
  return affine_sample(image, map, policy.out_size);
}

// Color jitter + optional blur on top of the geometric view. Draws are only
// consumed when the corresponding strength/probability is nonzero so that a
// degenerate strong policy replays the standard policy's stream exactly.
Image photometric(Image view, const AugmentPolicy& policy, Rng& rng) {
  if (policy.jitter_strength > 0.0) {
    const double brightness =
        rng.uniform(1.0 - policy.jitter_strength, 1.0 + policy.jitter_strength);
    const double contrast =
        rng.uniform(1.0 - policy.jitter_strength, 1.0 + policy.jitter_strength);
    double mean = 0.0;
    for (float v : view.px) mean += v;
    mean /= double(view.px.size());
    for (auto& v : view.px)
      v = float((double(v) * brightness - mean) * contrast + mean);
  }
  if (policy.blur_p > 0.0 && rng.bernoulli(policy.blur_p)) {
    const double sigma = rng.uniform(kBlurSigmaMin, kBlurSigmaMax);
    view = gaussian_blur(view, sigma);
  }
  clamp01(view);
  return view;
}

}  // namespace

AugmentPolicy AugmentPolicy::standard_defaults(int out_size) {
  AugmentPolicy p;
  p.crop_scale_min = 0.7;
  p.crop_scale_max = 1.0;
  p.jitter_strength = 0.0;
  p.blur_p = 0.0;
  p.out_size = out_size;
  return p;
}

AugmentPolicy AugmentPolicy::strong_defaults(int out_size) {
  AugmentPolicy p;
  p.crop_scale_min = 0.4;  // keeps the central galaxy mostly intact
  p.crop_scale_max = 1.0;
  p.jitter_strength = 0.3;
  p.blur_p = 0.2;
  p.out_size = out_size;
  return p;
}

void AugmentPolicy::validate() const {
  if (!(crop_scale_min > 0.0) || crop_scale_max > 1.0 || crop_scale_min > crop_scale_max)
    throw ConfigError("augment: crop scale range must lie within (0, 1]");
  if (flip_p < 0.0 || flip_p > 1.0 || blur_p < 0.0 || blur_p > 1.0)
    throw ConfigError("augment: probabilities must lie in [0, 1]");
  if (jitter_strength < 0.0) throw ConfigError("augment: jitter strength must be >= 0");
  if (out_size < 4) throw ConfigError("augment: output size too small");
}

Image standard_view(const Image& image, const AugmentPolicy& policy, Rng& rng) {
  Image view = geometric_view(image, policy, rng);
  clamp01(view);
  return view;
}

std::pair<Image, Image> strong_views(const Image& image, const AugmentPolicy& policy,
                                     Rng& rng) {
  Image a = photometric(geometric_view(image, policy, rng), policy, rng);
  Image b = photometric(geometric_view(image, policy, rng), policy, rng);
  return {std::move(a), std::move(b)};
}

}  // namespace gzhybrid
