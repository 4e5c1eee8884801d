#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "wbnet/physics/scatterers.hpp"

using namespace wbnet;

namespace {

const GridSpec kGrid = GridSpec::with_ppw({4, 5});

// Bounding boxes of the 4-connected components of the support of eta.
std::vector<PixelBlock> component_boxes(const RealGrid& eta) {
  const int n = int(eta.rows());
  std::vector<int> label(std::size_t(n) * n, -1);
  std::vector<PixelBlock> boxes;
  for (int i0 = 0; i0 < n; ++i0)
    for (int j0 = 0; j0 < n; ++j0) {
      if (eta(i0, j0) == 0.0 || label[i0 * n + j0] >= 0) continue;
      PixelBlock b{i0, i0 + 1, j0, j0 + 1};
      std::vector<std::pair<int, int>> stack{{i0, j0}};
      label[i0 * n + j0] = int(boxes.size());
      while (!stack.empty()) {
        const auto [i, j] = stack.back();
        stack.pop_back();
        b = {std::min(b.row0, i), std::max(b.row1, i + 1), std::min(b.col0, j), std::max(b.col1, j + 1)};
        for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const int a = i + di, c = j + dj;
          if (a < 0 || c < 0 || a >= n || c >= n || eta(a, c) == 0.0 || label[a * n + c] >= 0) continue;
          label[a * n + c] = int(boxes.size());
          stack.push_back({a, c});
        }
      }
      boxes.push_back(b);
    }
  return boxes;
}

int box_gap(const PixelBlock& a, const PixelBlock& b) {
  const int gr = std::max({0, b.row0 - a.row1, a.row0 - b.row1});
  const int gc = std::max({0, b.col0 - a.col1, a.col0 - b.col1});
  return std::max(gr, gc);
}

// Number of pixel centres inside the convex hull of the support (monotone chain).
int hull_pixel_count(const RealGrid& eta) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < eta.rows(); ++i)
    for (int j = 0; j < eta.cols(); ++j)
      if (eta(i, j) != 0.0) pts.push_back({double(i), double(j)});
  std::sort(pts.begin(), pts.end());
  const auto cross = [](auto o, auto a, auto b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  int count = 0;
  for (int i = 0; i < eta.rows(); ++i)
    for (int j = 0; j < eta.cols(); ++j) {
      bool inside = true;
      for (std::size_t e = 0; e < hull.size() && inside; ++e)
        inside = cross(hull[e], hull[(e + 1) % hull.size()], std::pair<double, double>(i, j)) >= -1e-12;
      count += inside;
    }
  return count;
}

}  // namespace

TEST(Families, NamesRoundTrip) {
  for (const auto& [f, name] : family_names()) EXPECT_EQ(family_from_string(name), f);
  EXPECT_THROW(family_from_string("pentagons"), ConfigError);
}

TEST(Families, SquaresCardinalityAndSides) {
  const auto spec = ScattererSpec::for_family(Family::squares);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Medium m = generate_medium(kGrid, spec, seed);
    ASSERT_GE(m.parts.size(), 2u);
    ASSERT_LE(m.parts.size(), 4u);
    RealGrid rebuilt = RealGrid::Zero(80, 80);
    for (const auto& p : m.parts) {
      ASSERT_TRUE(p.side == 3 || p.side == 5 || p.side == 10);
      ASSERT_EQ(p.box.row1 - p.box.row0, p.side);
      rebuilt.block(p.box.row0, p.box.col0, p.side, p.side).array() += 0.2;
    }
    ASSERT_LT((rebuilt - m.eta).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Families, TenSquaresExactlyTenOfSideTen) {
  const auto spec = ScattererSpec::for_family(Family::ten_squares);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Medium m = generate_medium(kGrid, spec, seed);
    ASSERT_EQ(m.parts.size(), 10u);
    for (const auto& p : m.parts) ASSERT_EQ(p.side, 10);
  }
}

TEST(Families, TrianglesAreRightTriangles) {
  const auto spec = ScattererSpec::for_family(Family::triangles);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Medium m = generate_medium(kGrid, spec, seed);
    ASSERT_GE(m.parts.size(), 2u);
    ASSERT_LE(m.parts.size(), 4u);
    double mass = 0;
    for (const auto& p : m.parts) mass += 0.2 * p.side * (p.side + 1) / 2;
    ASSERT_NEAR(m.eta.sum(), mass, 1e-9);
  }
}

TEST(Families, SupportInsideDilatedDisk) {
  for (Family f : {Family::squares, Family::triangles, Family::ten_squares}) {
    const auto spec = ScattererSpec::for_family(f);
    const double reach = spec.disk_radius + (10 * std::sqrt(0.5) + 1.5) * kGrid.h();
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const RealGrid eta = generate(kGrid, spec, seed);
      for (int i = 0; i < 80; ++i)
        for (int j = 0; j < 80; ++j)
          if (eta(i, j) != 0.0) ASSERT_LE(std::hypot(kGrid.node(i), kGrid.node(j)), reach);
    }
  }
}

TEST(Families, ZeroAmplitudeGivesZeroField) {
  for (Family f : {Family::squares, Family::triangles, Family::ten_squares, Family::gaussian2h, Family::blob,
                   Family::shepp_logan, Family::collision}) {
    auto spec = ScattererSpec::for_family(f);
    spec.amplitude = 0;
    EXPECT_TRUE(generate(kGrid, spec, 1).isZero(0)) << to_string(f);
  }
}

TEST(Families, DeterministicPerSeed) {
  for (const auto& [f, name] : family_names()) {
    const auto spec = ScattererSpec::for_family(f);
    const RealGrid a = generate(kGrid, spec, 42), b = generate(kGrid, spec, 42), c = generate(kGrid, spec, 43);
    EXPECT_EQ(a, b) << name;
    EXPECT_NE(a, c) << name;
  }
}

TEST(Families, BoundedOverThousandSamples) {
  const auto& fams = family_names();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto spec = ScattererSpec::for_family(fams[seed % fams.size()].first);
    const RealGrid eta = generate(kGrid, spec, seed);
    ASSERT_TRUE(eta.allFinite());
    ASSERT_LE(eta.maxCoeff(), 1.0) << to_string(spec.family) << " seed " << seed;
  }
}

TEST(Families, GaussianPeaksAtTwoPixelStd) {
  auto spec = ScattererSpec::for_family(Family::gaussian2h);
  spec.min_count = spec.max_count = 1;
  const Medium m = generate_medium(kGrid, spec, 5);
  const auto& p = m.parts[0];
  const int i = int(std::lround(p.ci)), j = int(std::lround(p.cj));
  const double d2 = (i - p.ci) * (i - p.ci) + (j - p.cj) * (j - p.cj);
  EXPECT_NEAR(m.eta(i, j), 0.2 * std::exp(-d2 / 8.0), 1e-12);
}

TEST(Collision, GapBetweenBoundingBoxes) {
  ScattererSpec spec = ScattererSpec::for_family(Family::collision);
  for (int gap : {1, 2, 4, 8, 16})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      spec.collision_gap = gap;
      const Medium m = generate_medium(kGrid, spec, seed);
      const auto boxes = component_boxes(m.eta);
      ASSERT_EQ(boxes.size(), 3u);
      int min_gap = 1 << 30;
      for (std::size_t a = 0; a < boxes.size(); ++a)
        for (std::size_t b = a + 1; b < boxes.size(); ++b) min_gap = std::min(min_gap, box_gap(boxes[a], boxes[b]));
      ASSERT_EQ(min_gap, gap);
    }
}

TEST(Collision, ZeroGapTouches) {
  ScattererSpec spec = ScattererSpec::for_family(Family::collision);
  spec.collision_gap = 0;
  const Medium m = generate_medium(kGrid, spec, 3);
  for (std::size_t k = 0; k + 1 < m.parts.size(); ++k) EXPECT_EQ(box_gap(m.parts[k].box, m.parts[k + 1].box), 0);
  EXPECT_NEAR(m.eta.sum(), 0.2 * (9 + 25 + 100), 1e-9);
}

TEST(Collision, TrianglesAndErrors) {
  ScattererSpec spec = ScattererSpec::for_family(Family::collision);
  spec.collision_shape = Shape::triangle;
  const Medium m = generate_medium(kGrid, spec, 4);
  EXPECT_NEAR(m.eta.sum(), 0.2 * (6 + 15 + 55), 1e-9);
  spec.collision_gap = 40;
  EXPECT_THROW(generate_medium(kGrid, spec, 4), ConfigError);
  spec.collision_gap = -1;
  EXPECT_THROW(generate_medium(kGrid, spec, 4), ConfigError);
}

TEST(Grf, CorrelationLengthFromAutocovariance) {
  for (std::uint64_t seed : {1u, 2u}) {
    const double ell = 0.04;
    const RealGrid f = generate_grf(kGrid, ell, 0.1, seed);
    const double mean = f.mean();
    const auto autocov = [&](int lag) {
      double s = 0;
      int count = 0;
      for (int i = 0; i < 80; ++i)
        for (int j = 0; j + lag < 80; ++j) {
          s += (f(i, j) - mean) * (f(i, j + lag) - mean) + (f(j, i) - mean) * (f(j + lag, i) - mean);
          count += 2;
        }
      return s / count;
    };
    // Least-squares fit of log(rho(d)) = -d^2 / (2 ell^2) over lags 1..4 px.
    const double c0 = autocov(0);
    double num = 0, den = 0;
    for (int d = 1; d <= 4; ++d) {
      const double x = double(d * d), y = std::log(autocov(d) / c0);
      num += x * y;
      den += x * x;
    }
    const double ell_px = std::sqrt(-1.0 / (2.0 * num / den));
    EXPECT_NEAR(ell_px * kGrid.h(), ell, 0.2 * ell) << "seed " << seed;
  }
}

TEST(Grf, GrandMeanWithinEnvelope) {
  const double ell = 0.04, sd = 0.1;
  double sum = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) sum += generate_grf(kGrid, ell, sd, seed).sum();
  const double mean = sum / (100.0 * 80 * 80);
  const double eff = 2 * std::numbers::pi * std::pow(ell / kGrid.h(), 2);
  EXPECT_LE(std::abs(mean), 3 * sd / std::sqrt(100.0 * 80 * 80 / eff));
  EXPECT_THROW(generate_grf(kGrid, 0.0, sd, 1), ConfigError);
}

TEST(SheppLogan, ZeroJitterIsClassicalPhantom) {
  auto spec = ScattererSpec::for_family(Family::shepp_logan);
  spec.sl_center_jitter = spec.sl_axis_jitter = spec.sl_angle_jitter_deg = spec.sl_intensity_jitter = 0;
  const RealGrid a = generate(kGrid, spec, 1), b = generate(kGrid, spec, 2);
  EXPECT_EQ(a, b);
  // Pixel nearest the phantom centre: skull minus brain = 0.2 intensity.
  EXPECT_NEAR(a(40, 40), 0.2 * 0.2, 1e-12);
  // Phantom point (0, 0.35) lies in ellipse 5 as well: 1 - 0.8 + 0.1.
  const int row = int(std::lround((-0.35 * spec.sl_scale - kGrid.domain_min) / kGrid.h() - 0.5));
  EXPECT_NEAR(a(row, 40), 0.2 * 0.3, 1e-12);
  EXPECT_EQ(a(0, 0), 0.0);
}

TEST(Blob, SomeSeedIsNonConvex) {
  const auto spec = ScattererSpec::for_family(Family::blob);
  int nonconvex = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RealGrid eta = generate(kGrid, spec, seed);
    const int area = int((eta.array() != 0.0).count());
    ASSERT_GT(area, 0);
    nonconvex += hull_pixel_count(eta) > area;
    EXPECT_LE(eta.maxCoeff(), 0.2);
  }
  EXPECT_GE(nonconvex, 1);
}
