#pragma once

// Heatmap and color-bar PNGs (8-bit RGB) written through libpng.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "pinnbc/error.hpp"
#include "pinnbc/grid.hpp"
#include "pinnbc/io.hpp"

namespace pinnbc::png {

using Rgb = std::array<std::uint8_t, 3>;
static_assert(sizeof(Rgb) == 3, "Rgb must be packed for libpng");

enum class Colormap { diverging, sequential };

inline Rgb lerp_stops(const std::vector<std::array<double, 3>>& stops, double t) {
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(stops.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(t), stops.size() - 2);
  const double u = t - static_cast<double>(k);
  Rgb out{};
  for (int c = 0; c < 3; ++c)
    out[c] = static_cast<std::uint8_t>(std::lround(255.0 * ((1.0 - u) * stops[k][c] + u * stops[k + 1][c])));
  return out;
}

inline Rgb color(Colormap map, double t) {
  static const std::vector<std::array<double, 3>> diverging{
      {0.23, 0.30, 0.75}, {0.55, 0.69, 0.99}, {0.87, 0.87, 0.87}, {0.96, 0.60, 0.48}, {0.71, 0.02, 0.15}};
  static const std::vector<std::array<double, 3>> sequential{
      {0.27, 0.00, 0.33}, {0.23, 0.32, 0.55}, {0.13, 0.57, 0.55}, {0.37, 0.79, 0.38}, {0.99, 0.91, 0.14}};
  return lerp_stops(map == Colormap::diverging ? diverging : sequential, t);
}

/// Encodes an RGB image (row-major, top row first) as PNG bytes.
inline std::vector<unsigned char> encode_rgb(int width, int height, const std::vector<Rgb>& pixels) {
  require(width > 0 && height > 0 && pixels.size() == static_cast<std::size_t>(width) * height,
          "encode_rgb: pixel count does not match dimensions");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw Error(ErrorKind::io_failure, std::string("png encoding failed: ") + image.message);
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw Error(ErrorKind::io_failure, std::string("png encoding failed: ") + image.message);
  out.resize(size);
  return out;
}

/// Writes a field as a heatmap with y pointing up, each node drawn as a
/// scale x scale block, colors mapped linearly over [vmin, vmax].
inline void write_heatmap(const std::filesystem::path& path, const GridField& field, double vmin, double vmax,
                          Colormap map, int scale = 4) {
  const int w = field.n * scale;
  std::vector<Rgb> pixels(static_cast<std::size_t>(w) * w);
  const double span = vmax > vmin ? vmax - vmin : 1.0;
  for (int py = 0; py < w; ++py) {
    const int j = field.n - 1 - py / scale;
    for (int px = 0; px < w; ++px) {
      const double v = field(px / scale, j);
      pixels[static_cast<std::size_t>(py) * w + px] = color(map, std::isfinite(v) ? (v - vmin) / span : 0.0);
    }
  }
  const auto bytes = encode_rgb(w, w, pixels);
  io::write_bytes(path, bytes.data(), bytes.size());
}

/// Horizontal color bar for a panel row.
inline void write_colorbar(const std::filesystem::path& path, Colormap map, int width = 256, int height = 16) {
  std::vector<Rgb> pixels(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      pixels[static_cast<std::size_t>(y) * width + x] = color(map, static_cast<double>(x) / (width - 1));
  const auto bytes = encode_rgb(width, height, pixels);
  io::write_bytes(path, bytes.data(), bytes.size());
}

}  // namespace pinnbc::png
