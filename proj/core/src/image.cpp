#include "gzhybrid/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "gzhybrid/errors.hpp"

namespace gzhybrid {

std::vector<std::uint8_t> image_to_u8(const Image& img) {
  std::vector<std::uint8_t> out(img.px.size());
  for (std::size_t i = 0; i < img.px.size(); ++i) {
    float v = img.px[i] * 255.0f + 0.5f;
    if (v < 0.0f) v = 0.0f;
    if (v > 255.0f) v = 255.0f;
    out[i] = std::uint8_t(v);
  }
  return out;
}

Image image_from_u8(const std::vector<std::uint8_t>& bytes, int c, int h, int w) {
  Image img(c, h, w);
  if (bytes.size() != img.px.size())
    throw DataError("image_from_u8: byte count does not match dimensions");
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.px[i] = float(bytes[i]) / 255.0f;
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 3) throw DataError("write_ppm: needs a 3-channel image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_ppm: cannot open " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  const auto u8 = image_to_u8(img);
  // PPM interleaves RGB per pixel; our buffer is planar.
  std::vector<std::uint8_t> row(std::size_t(img.width) * 3);
  const std::size_t plane = std::size_t(img.height) * img.width;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[std::size_t(x) * 3 + c] = u8[std::size_t(c) * plane + std::size_t(y) * img.width + x];
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!out) throw DataError("write_ppm: write failed for " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_ppm: cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw DataError("read_ppm: not a binary PPM: " + path.string());
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (w <= 0 || h <= 0 || maxval != 255)
    throw DataError("read_ppm: unsupported header in " + path.string());
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> inter(std::size_t(w) * h * 3);
  in.read(reinterpret_cast<char*>(inter.data()), std::streamsize(inter.size()));
  if (!in) throw DataError("read_ppm: truncated file " + path.string());
  Image img(3, h, w);
  const std::size_t plane = std::size_t(h) * w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.px[std::size_t(c) * plane + std::size_t(y) * w + x] =
            float(inter[(std::size_t(y) * w + x) * 3 + c]) / 255.0f;
  return img;
}

namespace {

// Mirror with edge repeat: ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

float sample_bilinear(const Image& img, int c, double y, double x) {
  const int y0 = int(std::floor(y));
  const int x0 = int(std::floor(x));
  const double fy = y - y0;
  const double fx = x - x0;
  const int ya = reflect_index(y0, img.height);
  const int yb = reflect_index(y0 + 1, img.height);
  const int xa = reflect_index(x0, img.width);
  const int xb = reflect_index(x0 + 1, img.width);
  const double v00 = img.at(c, ya, xa), v01 = img.at(c, ya, xb);
  const double v10 = img.at(c, yb, xa), v11 = img.at(c, yb, xb);
  return float((1 - fy) * ((1 - fx) * v00 + fx * v01) +
               fy * ((1 - fx) * v10 + fx * v11));
}

Image affine_sample(const Image& src, const Affine2& map, int out_size) {
  Image out(src.channels, out_size, out_size);
  const double ocy = 0.5 * (out_size - 1);
  const double ocx = 0.5 * (out_size - 1);
  for (int oy = 0; oy < out_size; ++oy) {
    for (int ox = 0; ox < out_size; ++ox) {
      const double dx = ox - ocx;
      const double dy = oy - ocy;
      const double sx = map.a00 * dx + map.a01 * dy + map.cx;
      const double sy = map.a10 * dx + map.a11 * dy + map.cy;
      for (int c = 0; c < src.channels; ++c)
        out.at(c, oy, ox) = sample_bilinear(src, c, sy, sx);
    }
  }
  return out;
}

Image resize_bilinear(const Image& src, int size) {
  if (src.height == size && src.width == size) return src;
  Affine2 map;
  const double scale = double(std::min(src.height, src.width)) / double(size);
  map.a00 = scale;
  map.a11 = scale;
  map.cx = 0.5 * (src.width - 1);
  map.cy = 0.5 * (src.height - 1);
  return affine_sample(src, map, size);
}

}  // namespace gzhybrid
