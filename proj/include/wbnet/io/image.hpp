#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#ifdef WBNET_HAVE_PNG
#include <png.h>
#endif

#include "wbnet/core/tensor.hpp"
#include "wbnet/io/blob.hpp"

namespace wbnet::io {

enum class Colormap { gray, hot };

struct ImageOptions {
  /// Fixed display range; values outside are clipped. Empty: the image's own min/max.
  std::optional<std::pair<double, double>> range;
  Colormap colormap = Colormap::gray;
  /// Each array entry becomes a scale x scale block (heat maps of small matrices).
  int scale = 1;
  bool png = false;
};

struct GrayImage {
  int rows = 0, cols = 0;
  std::vector<std::uint8_t> px;

  std::uint8_t operator()(int i, int j) const { return px[std::size_t(i) * std::size_t(cols) + std::size_t(j)]; }
};

/// Linear map onto 0..255; a constant image maps to mid gray.
inline GrayImage quantize(const RealGrid& img, const ImageOptions& opt = {}) {
  double lo = img.minCoeff(), hi = img.maxCoeff();
  if (opt.range) std::tie(lo, hi) = *opt.range;
  const int s = std::max(1, opt.scale);
  GrayImage g{int(img.rows()) * s, int(img.cols()) * s, {}};
  g.px.resize(std::size_t(g.rows) * std::size_t(g.cols));
  for (int i = 0; i < g.rows; ++i)
    for (int j = 0; j < g.cols; ++j) {
      const double v = img(i / s, j / s);
      double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      if (!std::isfinite(t)) t = 0;
      g.px[std::size_t(i) * std::size_t(g.cols) + std::size_t(j)] =
          std::uint8_t(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
    }
  return g;
}

/// Inverse of quantize for a known range.
inline RealGrid dequantize(const GrayImage& g, double lo, double hi) {
  RealGrid out(g.rows, g.cols);
  for (int i = 0; i < g.rows; ++i)
    for (int j = 0; j < g.cols; ++j) out(i, j) = lo + (hi - lo) * g(i, j) / 255.0;
  return out;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& g) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(FormatErrc::io, "cannot create " + path.string());
  f << "P5\n" << g.cols << ' ' << g.rows << "\n255\n";
  f.write(reinterpret_cast<const char*>(g.px.data()), std::streamsize(g.px.size()));
  if (!f) throw FormatError(FormatErrc::io, "short write to " + path.string());
}

/// Reads binary 8-bit PGM (P5) as written by write_pgm; comments are not supported.
inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  GrayImage g;
  f >> magic >> g.cols >> g.rows >> maxval;
  if (magic != "P5" || maxval != 255 || g.cols <= 0 || g.rows <= 0)
    throw FormatError(FormatErrc::magic, path.string() + " is not an 8-bit binary PGM");
  f.get();
  g.px.resize(std::size_t(g.rows) * std::size_t(g.cols));
  f.read(reinterpret_cast<char*>(g.px.data()), std::streamsize(g.px.size()));
  if (f.gcount() != std::streamsize(g.px.size())) throw FormatError(FormatErrc::truncated, path.string());
  return g;
}

inline std::array<std::uint8_t, 3> apply_colormap(std::uint8_t v, Colormap c) {
  if (c == Colormap::gray) return {v, v, v};
  // black -> red -> yellow -> white
  const int t = 3 * v;
  return {std::uint8_t(std::min(t, 255)), std::uint8_t(std::clamp(t - 255, 0, 255)),
          std::uint8_t(std::clamp(t - 510, 0, 255))};
}

inline bool png_available() {
#ifdef WBNET_HAVE_PNG
  return true;
#else
  return false;
#endif
}

inline void write_png(const std::filesystem::path& path, const GrayImage& g, Colormap c) {
#ifdef WBNET_HAVE_PNG
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw FormatError(FormatErrc::io, "cannot create " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw FormatError(FormatErrc::io, "libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(g.cols), png_uint_32(g.rows), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(std::size_t(g.cols) * 3);
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) {
      const auto rgb = apply_colormap(g(i, j), c);
      std::copy(rgb.begin(), rgb.end(), row.begin() + std::ptrdiff_t(3 * j));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
#else
  (void)g;
  (void)c;
  throw ConfigError("PNG output requested but this build has no libpng (configure with -DWBNET_PNG=ON): " +
                    path.string());
#endif
}

/// Writes `<stem>.pgm`, plus `<stem>.png` in the chosen colormap when opt.png is set.
inline void emit_image(const std::filesystem::path& stem, const RealGrid& img, const ImageOptions& opt = {}) {
  const GrayImage g = quantize(img, opt);
  auto pgm = stem;
  write_pgm(pgm += ".pgm", g);
  if (opt.png) {
    auto png = stem;
    write_png(png += ".png", g, opt.colormap);
  }
}

}  // namespace wbnet::io
