#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "wbnet/core/fft.hpp"
#include "wbnet/core/grid.hpp"
#include "wbnet/core/tensor.hpp"

namespace wbnet {

enum class Family { blob, squares, triangles, gaussian2h, ten_squares, shepp_logan, grf, collision };

inline const std::vector<std::pair<Family, std::string>>& family_names() {
  static const std::vector<std::pair<Family, std::string>> names{
      {Family::blob, "blob"},
      {Family::squares, "squares"},
      {Family::triangles, "triangles"},
      {Family::gaussian2h, "gaussian2h"},
      {Family::ten_squares, "ten_squares"},
      {Family::shepp_logan, "shepp_logan"},
      {Family::grf, "grf"},
      {Family::collision, "collision"},
  };
  return names;
}

inline std::string to_string(Family f) {
  for (const auto& [fam, name] : family_names())
    if (fam == f) return name;
  return "unknown";
}

inline Family family_from_string(const std::string& s) {
  for (const auto& [fam, name] : family_names())
    if (name == s) return fam;
  throw ConfigError("unknown scatterer family '" + s + "'");
}

enum class Shape { square, triangle };

/// Parameters of one medium family. Lengths in pixels unless noted.
struct ScattererSpec {
  Family family = Family::squares;
  double amplitude = 0.2;
  int min_count = 2;
  int max_count = 4;
  double disk_radius = 0.35;  // domain units
  std::vector<int> sides{3, 5, 10};
  double gaussian_std_px = 2.0;
  // Gaussian random field
  double corr_len = 0.04;  // domain units
  double grf_std = 0.1;
  // Shepp-Logan jitter (fractions / degrees); zero reproduces the classical phantom
  double sl_center_jitter = 0.05;
  double sl_axis_jitter = 0.10;
  double sl_angle_jitter_deg = 10.0;
  double sl_intensity_jitter = 0.10;
  double sl_scale = 0.4;  // domain units per phantom unit
  // Blob
  double blob_r0_min = 0.1, blob_r0_max = 0.2, blob_max_coeff = 0.15;
  int blob_harmonics = 5;
  // Collision
  Shape collision_shape = Shape::square;
  int collision_gap = 8;

  static ScattererSpec for_family(Family f) {
    ScattererSpec s;
    s.family = f;
    if (f == Family::ten_squares) {
      s.min_count = s.max_count = 10;
      s.sides = {10};
    } else if (f == Family::collision) {
      s.sides = {3, 5, 10};
    }
    return s;
  }
};

/// One placed scatterer: centre in fractional pixel coordinates and its bounding box.
struct Scatterer {
  double ci = 0, cj = 0;
  PixelBlock box{};
  int side = 0;
};

struct Medium {
  RealGrid eta;
  std::vector<Scatterer> parts;
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Uniform point in the disk of radius r (domain units).
inline std::pair<double, double> in_disk(std::mt19937_64& rng, double r) {
  for (;;) {
    const double x = uniform(rng, -r, r), y = uniform(rng, -r, r);
    if (x * x + y * y <= r * r) return {x, y};
  }
}

// Fractional pixel coordinate of a domain position.
inline double to_pixel(const GridSpec& g, double x) { return (x - g.domain_min) / g.h() - 0.5; }

// Adds an axis-aligned polygon mask (square or right triangle with the given orientation)
// with its top-left pixel at (i0, j0).
inline void stamp(RealGrid& eta, int i0, int j0, int side, Shape shape, int orientation, double amp) {
  for (int p = 0; p < side; ++p)
    for (int q = 0; q < side; ++q) {
      if (shape == Shape::triangle) {
        const int pp = (orientation & 1) ? side - 1 - p : p;
        const int qq = (orientation & 2) ? side - 1 - q : q;
        if (pp + qq > side - 1) continue;
      }
      eta(i0 + p, j0 + q) += amp;
    }
}

inline Medium polygons(const GridSpec& g, const ScattererSpec& spec, Shape shape, std::mt19937_64& rng) {
  const int n = g.n();
  Medium m{RealGrid::Zero(n, n), {}};
  const int count = uniform_int(rng, spec.min_count, spec.max_count);
  for (int k = 0; k < count; ++k) {
    const int side = spec.sides[std::size_t(uniform_int(rng, 0, int(spec.sides.size()) - 1))];
    const int orientation = shape == Shape::triangle ? uniform_int(rng, 0, 3) : 0;
    for (;;) {
      const auto [x, y] = in_disk(rng, spec.disk_radius);
      const int i0 = int(std::lround(to_pixel(g, x) - 0.5 * (side - 1)));
      const int j0 = int(std::lround(to_pixel(g, y) - 0.5 * (side - 1)));
      if (i0 < 0 || j0 < 0 || i0 + side > n || j0 + side > n) continue;
      stamp(m.eta, i0, j0, side, shape, orientation, spec.amplitude);
      m.parts.push_back({i0 + 0.5 * (side - 1), j0 + 0.5 * (side - 1), {i0, i0 + side, j0, j0 + side}, side});
      break;
    }
  }
  return m;
}

inline Medium gaussians(const GridSpec& g, const ScattererSpec& spec, std::mt19937_64& rng) {
  const int n = g.n();
  Medium m{RealGrid::Zero(n, n), {}};
  const int count = uniform_int(rng, spec.min_count, spec.max_count);
  const double w = spec.gaussian_std_px;
  for (int k = 0; k < count; ++k) {
    const auto [x, y] = in_disk(rng, spec.disk_radius);
    const double ci = to_pixel(g, x), cj = to_pixel(g, y);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
        m.eta(i, j) += spec.amplitude * std::exp(-0.5 * d2 / (w * w));
      }
    const int half = int(std::ceil(2 * w));
    m.parts.push_back({ci, cj, {int(ci) - half, int(ci) + half + 1, int(cj) - half, int(cj) + half + 1}, 2 * half + 1});
  }
  return m;
}

inline Medium blob(const GridSpec& g, const ScattererSpec& spec, std::mt19937_64& rng) {
  const int n = g.n();
  Medium m{RealGrid::Zero(n, n), {}};
  const double r0 = uniform(rng, spec.blob_r0_min, spec.blob_r0_max);
  std::vector<double> a(std::size_t(spec.blob_harmonics)), phi(a.size());
  double rmax = r0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = uniform(rng, -spec.blob_max_coeff, spec.blob_max_coeff);
    phi[k] = uniform(rng, 0, 2 * std::numbers::pi);
    rmax += r0 * std::abs(a[k]);
  }
  double cx = 0, cy = 0;
  for (;;) {
    std::tie(cx, cy) = in_disk(rng, spec.disk_radius);
    if (std::abs(cx) + rmax < 0.5 * g.length() - g.h() && std::abs(cy) + rmax < 0.5 * g.length() - g.h()) break;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dx = g.node(i) - cx, dy = g.node(j) - cy;
      const double th = std::atan2(dy, dx);
      double r = 1.0;
      for (std::size_t k = 0; k < a.size(); ++k) r += a[k] * std::cos(double(k + 1) * th + phi[k]);
      if (std::hypot(dx, dy) <= r0 * r) m.eta(i, j) = spec.amplitude;
    }
  const double ci = to_pixel(g, cx), cj = to_pixel(g, cy), rp = rmax / g.h();
  m.parts.push_back({ci, cj, {int(ci - rp), int(ci + rp) + 1, int(cj - rp), int(cj + rp) + 1}, int(2 * rp)});
  return m;
}

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

// Modified (Toft) Shepp-Logan table in phantom units on [-1,1]^2.
inline const std::array<Ellipse, 10>& shepp_logan_table() {
  static const std::array<Ellipse, 10> t{{
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
      {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
      {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
      {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
  }};
  return t;
}

inline Medium shepp_logan(const GridSpec& g, const ScattererSpec& spec, std::mt19937_64& rng) {
  const int n = g.n();
  Medium m{RealGrid::Zero(n, n), {}};
  for (Ellipse e : shepp_logan_table()) {
    e.x0 += spec.sl_center_jitter * uniform(rng, -1, 1);
    e.y0 += spec.sl_center_jitter * uniform(rng, -1, 1);
    e.a *= 1 + spec.sl_axis_jitter * uniform(rng, -1, 1);
    e.b *= 1 + spec.sl_axis_jitter * uniform(rng, -1, 1);
    e.phi_deg += spec.sl_angle_jitter_deg * uniform(rng, -1, 1);
    e.intensity *= 1 + spec.sl_intensity_jitter * uniform(rng, -1, 1);
    const double c = std::cos(e.phi_deg * std::numbers::pi / 180), s = std::sin(e.phi_deg * std::numbers::pi / 180);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        // Phantom x runs along columns, y up the rows (image convention).
        const double x = g.node(j) / spec.sl_scale - e.x0, y = -g.node(i) / spec.sl_scale - e.y0;
        const double u = x * c + y * s, v = -x * s + y * c;
        if ((u * u) / (e.a * e.a) + (v * v) / (e.b * e.b) <= 1.0) m.eta(i, j) += spec.amplitude * e.intensity;
      }
  }
  // The outer skull and inner brain ellipses nest; tiny negative residues from jitter are clipped.
  m.eta = m.eta.cwiseMax(0.0);
  return m;
}

}  // namespace detail

/// Stationary Gaussian random field with covariance std^2 exp(-|d|^2 / (2 corr_len^2)), sampled
/// exactly by circulant embedding on a grid padded to twice the size.
inline RealGrid generate_grf(const GridSpec& g, double corr_len, double std_dev, std::uint64_t seed) {
  if (!(corr_len > 0)) throw ConfigError("GRF correlation length must be positive");
  const int n = g.n();
  const int m = 2 * n;
  const double h = g.h();
  ComplexGrid cov(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double di = std::min(i, m - i) * h, dj = std::min(j, m - j) * h;
      cov(i, j) = std_dev * std_dev * std::exp(-(di * di + dj * dj) / (2 * corr_len * corr_len));
    }
  fft2(cov);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ComplexGrid w(m, m);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = normal(rng);
  fft2(w);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] *= std::sqrt(std::max(0.0, cov.data()[k].real()));
  fft2(w, true);
  RealGrid out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = w(i, j).real();
  return out;
}

/// Shapes placed along a seeded axis direction with exactly `gap` empty pixels between
/// consecutive bounding boxes (0 means touching). Perpendicular offsets keep projections
/// overlapping, so the Chebyshev gap between neighbours equals `gap`.
inline Medium generate_collision(const GridSpec& g, Shape shape, const std::vector<int>& sides, int gap,
                                 double amplitude, std::uint64_t seed) {
  if (gap < 0) throw ConfigError("collision gap must be non-negative");
  if (sides.empty()) throw ConfigError("collision needs at least one scatterer");
  const int n = g.n();
  int extent = gap * int(sides.size() - 1);
  int widest = 0;
  for (int s : sides) {
    extent += s;
    widest = std::max(widest, s);
  }
  if (extent > n - 2) throw ConfigError("collision configuration of extent " + std::to_string(extent) +
                                        " px exceeds the " + std::to_string(n) + " px domain");
  std::mt19937_64 rng(seed);
  const int axis = detail::uniform_int(rng, 0, 1);
  const bool reverse = detail::uniform_int(rng, 0, 1) == 1;
  const int start = (n - extent) / 2;
  const int centre_perp = n / 2;
  Medium m{RealGrid::Zero(n, n), {}};
  int along = start;
  for (std::size_t k = 0; k < sides.size(); ++k) {
    const int s = reverse ? sides[sides.size() - 1 - k] : sides[k];
    const int jitter = detail::uniform_int(rng, -(s - 1) / 2, (s - 1) / 2);
    const int perp0 = centre_perp - s / 2 + jitter;
    const int orientation = shape == Shape::triangle ? detail::uniform_int(rng, 0, 3) : 0;
    const int i0 = axis == 0 ? along : perp0;
    const int j0 = axis == 0 ? perp0 : along;
    detail::stamp(m.eta, i0, j0, s, shape, orientation, amplitude);
    m.parts.push_back({i0 + 0.5 * (s - 1), j0 + 0.5 * (s - 1), {i0, i0 + s, j0, j0 + s}, s});
    along += s + gap;
  }
  return m;
}

/// Draws one medium of the requested family; deterministic in (spec, seed).
inline Medium generate_medium(const GridSpec& g, const ScattererSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (spec.family) {
    case Family::squares:
    case Family::ten_squares:
      return detail::polygons(g, spec, Shape::square, rng);
    case Family::triangles:
      return detail::polygons(g, spec, Shape::triangle, rng);
    case Family::gaussian2h:
      return detail::gaussians(g, spec, rng);
    case Family::blob:
      return detail::blob(g, spec, rng);
    case Family::shepp_logan:
      return detail::shepp_logan(g, spec, rng);
    case Family::grf:
      return {generate_grf(g, spec.corr_len, spec.grf_std, seed), {}};
    case Family::collision:
      return generate_collision(g, spec.collision_shape, spec.sides, spec.collision_gap, spec.amplitude, seed);
  }
  throw ConfigError("unhandled family");
}

inline RealGrid generate(const GridSpec& g, const ScattererSpec& spec, std::uint64_t seed) {
  return generate_medium(g, spec, seed).eta;
}

}  // namespace wbnet
