#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include "wbnet/core/fft.hpp"
#include "wbnet/core/grid.hpp"
#include "wbnet/core/parallel.hpp"
#include "wbnet/core/quadtree.hpp"

using namespace wbnet;

namespace {

RealGrid random_grid(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RealGrid m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = nd(rng);
  return m;
}

Tensor<double> random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Tensor<double> t(std::move(shape));
  for (auto& v : t.storage()) v = nd(rng);
  return t;
}

}  // namespace

TEST(GridSpec, FrequenciesHalvePerLevel) {
  const GridSpec g = GridSpec::with_ppw({4, 5});
  EXPECT_EQ(g.n(), 80);
  EXPECT_DOUBLE_EQ(g.f_max, 10.0);
  const auto f = g.frequencies();
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].level, 2);
  EXPECT_DOUBLE_EQ(f[0].hertz, 2.5);
  EXPECT_DOUBLE_EQ(f[1].hertz, 5.0);
  EXPECT_DOUBLE_EQ(f[2].hertz, 10.0);
  EXPECT_NEAR(g.node(0), -0.5 + 0.5 / 80, 1e-15);
}

TEST(GridSpec, OddLevelUsesCeilMidpoint) {
  const GridSpec g = GridSpec::with_ppw({3, 4});
  EXPECT_EQ(g.n(), 32);
  const auto f = g.frequencies();
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].level, 2);
  EXPECT_DOUBLE_EQ(f[1].hertz, 4.0);
}

TEST(GridSpec, RejectsBadTree) {
  EXPECT_THROW((QuadTree{1, 5}.validate()), ConfigError);
  EXPECT_THROW((QuadTree{4, 0}.validate()), ConfigError);
}

TEST(Tensorize, FourByFourExample) {
  Grid2<double> m(4, 4);
  for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = i + 1;
  const auto t = tensorize(m, QuadTree{2, 1}, 1);
  ASSERT_EQ(t.data.shape(), (std::vector<std::size_t>{2, 2, 4}));
  EXPECT_EQ(t.data(0, 0, 0), 1);
  EXPECT_EQ(t.data(0, 0, 1), 2);
  EXPECT_EQ(t.data(0, 0, 2), 5);
  EXPECT_EQ(t.data(0, 0, 3), 6);
  EXPECT_EQ(detensorize(t), m);
}

TEST(Tensorize, FinestLevelLeafOneIsIdentity) {
  std::mt19937_64 rng(1);
  const RealGrid m = random_grid(8, rng);
  const auto t = tensorize(m, QuadTree{3, 1}, 3);
  ASSERT_EQ(t.channels(), 1u);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_EQ(t.data(i, j, 0), m(i, j));
}

TEST(Tensorize, FullScaleShapeAndRoundTrip) {
  std::mt19937_64 rng(2);
  const QuadTree tree{4, 5};
  const RealGrid m = random_grid(80, rng);
  const auto t = tensorize(m, tree, 2);
  EXPECT_EQ(t.data.shape(), (std::vector<std::size_t>{4, 4, 400}));
  EXPECT_EQ(detensorize(t), m);
}

TEST(Tensorize, ThousandRandomRoundTrips) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> L(2, 4), s(1, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const QuadTree tree{L(rng), s(rng)};
    std::uniform_int_distribution<int> lvl(tree.mid_level(), tree.levels);
    const RealGrid m = random_grid(tree.n(), rng);
    ASSERT_EQ(detensorize(tensorize(m, tree, lvl(rng))), m);
  }
}

TEST(Tensorize, ZeroTensorGivesZeroMatrix) {
  const QuadTree tree{2, 2};
  QuadTreeTensor<double> t{tree, 1, Tensor<double>({2, 2, 16})};
  EXPECT_TRUE(detensorize(t).isZero(0));
}

TEST(Tensorize, ShapeErrors) {
  const RealGrid m = RealGrid::Zero(7, 7);
  EXPECT_THROW(tensorize(m, QuadTree{2, 2}, 2), ShapeError);
  const RealGrid ok = RealGrid::Zero(8, 8);
  EXPECT_THROW(tensorize(ok, QuadTree{2, 2}, 0), ShapeError);
}

TEST(Tensorize, CellsPartitionPixels) {
  const QuadTree tree{4, 5};
  for (int l = tree.mid_level(); l <= tree.levels; ++l) {
    QuadTreeTensor<double> t{tree, l, {}};
    std::vector<int> hits(80 * 80, 0);
    for (int i = 0; i < tree.cells(l); ++i)
      for (int j = 0; j < tree.cells(l); ++j) {
        const PixelBlock b = t.cell_block(i, j);
        EXPECT_EQ(b.row0, i * (5 << (4 - l)));
        for (int p = b.row0; p < b.row1; ++p)
          for (int q = b.col0; q < b.col1; ++q) ++hits[p * 80 + q];
      }
    for (int h : hits) ASSERT_EQ(h, 1);
  }
}

TEST(Tensorize, SplitComplexInterleaves) {
  Tensor<std::complex<double>> t({1, 1, 2});
  t[0] = {1, 2};
  t[1] = {3, 4};
  const auto r = split_complex<float>(t);
  EXPECT_EQ(r.shape(), (std::vector<std::size_t>{1, 1, 4}));
  EXPECT_EQ(r.storage(), (std::vector<float>{1, 2, 3, 4}));
}

TEST(SpaceToDepth, FixedChildOrder) {
  Tensor<double> t({2, 2, 1});
  t(0, 0, 0) = 1;  // a
  t(0, 1, 0) = 2;  // b
  t(1, 0, 0) = 3;  // c
  t(1, 1, 0) = 4;  // d
  const auto s = space_to_depth(t);
  ASSERT_EQ(s.shape(), (std::vector<std::size_t>{1, 1, 4}));
  EXPECT_EQ(s.storage(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(SpaceToDepth, RoundTripRandom) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> lvl(1, 4), ch(1, 5), batch(1, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = std::size_t(1) << lvl(rng);
    const auto x = trial % 2 ? random_tensor({c, c, std::size_t(ch(rng))}, rng)
                             : random_tensor({std::size_t(batch(rng)), c, c, std::size_t(ch(rng))}, rng);
    ASSERT_EQ(depth_to_space(space_to_depth(x)), x);
  }
}

TEST(SpaceToDepth, TwoStepsFromLevelFour) {
  std::mt19937_64 rng(5);
  const auto x = random_tensor({16, 16, 3}, rng);
  const auto y = space_to_depth(space_to_depth(x));
  EXPECT_EQ(y.shape(), (std::vector<std::size_t>{4, 4, 48}));
}

TEST(SpaceToDepth, UnderflowAtLevelZero) {
  EXPECT_THROW(space_to_depth(Tensor<double>({1, 1, 4})), ShapeError);
}

TEST(Switch, OneHotRedistribution) {
  // L=4, p=1: 16 cells with 16 channels; entry (cell c,d ; package k) = 100*(4c+d) + k.
  Tensor<double> t({4, 4, 16});
  for (int c = 0; c < 4; ++c)
    for (int d = 0; d < 4; ++d)
      for (int k = 0; k < 16; ++k) t(c, d, k) = 100 * (4 * c + d) + k;
  const auto s = switch_permute(t);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int k = 0; k < 16; ++k) EXPECT_EQ(s(a, b, k), 100 * k + (4 * a + b));
}

TEST(Switch, InvolutionAndMultisetPreserved) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = std::size_t(1) << (1 + trial % 3);
    const std::size_t p = 1 + std::size_t(trial % 4);
    const auto x = random_tensor({1 + std::size_t(trial % 2), c, c, c * c * p}, rng);
    const auto y = switch_permute(x);
    ASSERT_EQ(switch_permute(y), x);
    auto a = x.storage(), b = y.storage();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ASSERT_EQ(a, b);
  }
}

TEST(Switch, IndivisibleChannelsRejected) {
  EXPECT_THROW(switch_permute(Tensor<double>({4, 4, 8})), ShapeError);
}

TEST(Fft, InverseRoundTripAndDelta) {
  ComplexGrid a = ComplexGrid::Zero(6, 4);
  a(0, 0) = 1;
  ComplexGrid b = a;
  fft2(b);
  for (Eigen::Index k = 0; k < b.size(); ++k) EXPECT_NEAR(std::abs(b(k) - 1.0), 0, 1e-14);
  fft2(b, true);
  EXPECT_LT((b - a).norm(), 1e-14);
}

TEST(Parallel, CoversEveryIndexOnceAndPropagatesErrors) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw DataError("x"); }, 3), DataError);
}
