#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gzhybrid {

// CHW float image with values in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> px;

  Image() = default;
  Image(int c, int h, int w) : channels(c), height(h), width(w), px(std::size_t(c) * h * w, 0.0f) {}

  float& at(int c, int y, int x) {
    return px[(std::size_t(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return px[(std::size_t(c) * height + y) * width + x];
  }
};

// 8-bit conversion (round + clamp) used by the on-disk dataset format.
std::vector<std::uint8_t> image_to_u8(const Image& img);
Image image_from_u8(const std::vector<std::uint8_t>& bytes, int c, int h, int w);

// Lossless 8-bit RGB storage as binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

// Bilinear sampling with reflected borders at continuous coords (y, x).
float sample_bilinear(const Image& img, int c, double y, double x);

// out(oy, ox) samples src at  [sy, sx]^T = A * [ox - ocx, oy - ocy]^T + [scx, scy]^T
// where (ocx, ocy) is the output center and (scx, scy) the source anchor.
struct Affine2 {
  double a00 = 1, a01 = 0, a10 = 0, a11 = 1;  // row-major 2x2, maps (dx, dy)
  double cx = 0, cy = 0;                      // source anchor
};
Image affine_sample(const Image& src, const Affine2& map, int out_size);

// Bilinear resize to size x size (anchored at the image center).
Image resize_bilinear(const Image& src, int size);

}  // namespace gzhybrid
