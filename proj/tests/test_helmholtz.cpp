#include <gtest/gtest.h>

#include "support.hpp"
#include "wbnet/physics/scatterers.hpp"

using namespace wbnet;

namespace {

const GridSpec kGrid = GridSpec::with_ppw({4, 5});

// Applies the interior rows of the assembled operator to the analytic Green's function and
// returns ||A G|| / ||w^2 G|| over nodes in the annulus [0.1, 0.4] (no PML, no source).
double operator_residual(int n, StencilOrder order) {
  GridSpec g;
  g.tree = {1, n / 2};
  g.f_max = 10;
  const auto sys = assemble_system(g, RealGrid::Zero(n, n), 10.0, order);
  const double w = sys.omega();
  const int c = n / 2;
  Eigen::VectorXcd G = Eigen::VectorXcd::Zero(Eigen::Index(sys.side) * sys.side);
  for (int I = 0; I < sys.side; ++I)
    for (int J = 0; J < sys.side; ++J) {
      const double r = std::hypot(sys.coord(I) - g.node(c), sys.coord(J) - g.node(c));
      if (r > 0) G(sys.index(I, J)) = wbtest::green(w, r);
    }
  const Eigen::VectorXcd AG = sys.matrix * G;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = std::hypot(g.node(i) - g.node(c), g.node(j) - g.node(c));
      if (r < 0.1 || r > 0.4) continue;
      const int k = sys.index(sys.comp(i), sys.comp(j));
      num += std::norm(AG(k));
      den += std::norm(w * w * G(k));
    }
  return std::sqrt(num / den);
}

}  // namespace

TEST(Assemble, InteriorFivePointRow) {
  const auto sys = assemble_system(kGrid, RealGrid::Zero(80, 80), 10.0, StencilOrder::second);
  const double h = kGrid.h(), w = sys.omega();
  const int row = sys.index(sys.comp(40), sys.comp(40));
  EXPECT_NEAR(std::abs(sys.matrix.coeff(row, row) - cd(-4 / (h * h) + w * w)), 0, 1e-9);
  for (int nb : {sys.index(sys.comp(39), sys.comp(40)), sys.index(sys.comp(41), sys.comp(40)),
                 sys.index(sys.comp(40), sys.comp(39)), sys.index(sys.comp(40), sys.comp(41))})
    EXPECT_NEAR(std::abs(sys.matrix.coeff(row, nb) - cd(1 / (h * h))), 0, 1e-9);
  int nnz = 0;
  for (Eigen::SparseMatrix<cd>::InnerIterator it(sys.matrix, row); it; ++it) nnz += it.value() != cd(0);
  EXPECT_EQ(nnz, 5);
}

TEST(Assemble, FourthOrderUsesNinePoints) {
  const auto sys = assemble_system(kGrid, RealGrid::Zero(80, 80), 10.0, StencilOrder::fourth);
  const int row = sys.index(sys.comp(40), sys.comp(40));
  int nnz = 0;
  for (Eigen::SparseMatrix<cd>::InnerIterator it(sys.matrix, row); it; ++it) nnz += it.value() != cd(0);
  EXPECT_EQ(nnz, 9);
}

TEST(Assemble, SizeIncludesPml) {
  for (double f : {2.5, 5.0, 10.0}) {
    const auto sys = assemble_system(kGrid, RealGrid::Zero(80, 80), f, StencilOrder::second);
    EXPECT_EQ(sys.pml, int(std::lround(1.0 / (f * kGrid.h()))));
    EXPECT_EQ(sys.matrix.rows(), (80 + 2 * sys.pml) * (80 + 2 * sys.pml));
  }
  EXPECT_EQ(assemble_system(kGrid, RealGrid::Zero(80, 80), 10.0, StencilOrder::second).pml, 8);
}

TEST(Assemble, Errors) {
  EXPECT_THROW(assemble_system(kGrid, RealGrid::Zero(80, 80), 0.0, StencilOrder::second), ConfigError);
  EXPECT_THROW(assemble_system(kGrid, RealGrid::Zero(80, 80), 10.0, StencilOrder::second, {400, 80, 1}),
               ConfigError);
  EXPECT_THROW(assemble_system(kGrid, RealGrid::Zero(40, 40), 10.0, StencilOrder::second), ShapeError);
  EXPECT_THROW(stencil_from_int(3), ConfigError);
}

TEST(Assemble, AnalyticGreenResidualConverges) {
  const double r2a = operator_residual(80, StencilOrder::second), r2b = operator_residual(160, StencilOrder::second);
  const double r4a = operator_residual(80, StencilOrder::fourth), r4b = operator_residual(160, StencilOrder::fourth);
  EXPECT_NEAR(r2a / r2b, 4.0, 0.8);
  EXPECT_NEAR(r4a / r4b, 16.0, 4.8);
  EXPECT_LT(r4a, r2a);
}

TEST(Solve, ZeroPerturbationGivesZeroField) {
  const RealGrid eta = RealGrid::Zero(80, 80);
  const auto u = solve_scattered(assemble_system(kGrid, eta, 10.0, StencilOrder::second), eta, 0.3);
  EXPECT_EQ(u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solve, PointSourceMatchesHankel) {
  EXPECT_LE(wbtest::green_error(80, 10.0, StencilOrder::fourth, {}, 2 * kGrid.h(), 0.5), 0.05);
}

TEST(Solve, SecondOrderRefinementQuartersError) {
  const PmlSpec thick{0, 80, 3};
  const double e80 = wbtest::green_error(80, 10.0, StencilOrder::second, thick, 0.1, 0.4);
  const double e160 = wbtest::green_error(160, 10.0, StencilOrder::second, thick, 0.1, 0.4);
  EXPECT_NEAR(e80 / e160, 4.0, 0.8);
}

TEST(Solve, FactorOnceMatchesPerSourceFactorisation) {
  const RealGrid eta = generate(kGrid, ScattererSpec::for_family(Family::squares), 11);
  const auto sys = assemble_system(kGrid, eta, 5.0, StencilOrder::second);
  HelmholtzSolver solver(sys);
  const std::vector<double> angles{0.0, 1.0, 2.5};
  const Eigen::MatrixXcd all = solver.solve_plane_waves(eta, angles);
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const Eigen::VectorXcd one = solve_scattered(sys, eta, angles[k]);
    EXPECT_EQ((one - all.col(Eigen::Index(k))).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(FarField, ZeroPerturbationZeroCube) {
  const auto cube = forward_map(kGrid, RealGrid::Zero(80, 80), StencilOrder::second);
  ASSERT_EQ(cube.frequencies(), 3u);
  for (const auto& s : cube.slices) EXPECT_EQ(s.cwiseAbs().maxCoeff(), 0.0);
  const auto geo = AcquisitionGeometry::for_grid(kGrid);
  const auto rec = forward_slice(kGrid, RealGrid::Zero(80, 80), geo, 5.0, StencilOrder::second, {},
                                 SamplingMode::receiver);
  EXPECT_EQ(rec.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FarField, ReciprocitySquares) {
  const RealGrid eta = generate(kGrid, ScattererSpec::for_family(Family::squares), 3);
  const auto geo = AcquisitionGeometry::for_grid(kGrid);
  for (auto order : {StencilOrder::second, StencilOrder::fourth})
    EXPECT_LE(wbtest::reciprocity_error(forward_slice(kGrid, eta, geo, 10.0, order)), 0.05);
}

TEST(FarField, PointScattererIsRotationInvariant) {
  RealGrid eta = RealGrid::Zero(80, 80);
  eta(40, 40) = 0.1;
  const auto geo = AcquisitionGeometry::for_grid(kGrid);
  const auto lambda = forward_slice(kGrid, eta, geo, 10.0, StencilOrder::fourth);
  for (int d = 0; d < 80; ++d) {
    double lo = 1e300, hi = 0;
    for (int k = 0; k < 80; ++k) {
      const double a = std::abs(lambda(k, (k + d) % 80));
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    EXPECT_LE((hi - lo) / hi, 0.05) << "angle offset " << d;
  }
}

TEST(FarField, LinearAtSmallAmplitude) {
  RealGrid eta = generate(kGrid, ScattererSpec::for_family(Family::gaussian2h), 4);
  eta *= 0.01 / eta.maxCoeff();
  const auto geo = AcquisitionGeometry::for_grid(kGrid);
  const auto a = forward_slice(kGrid, eta, geo, 10.0, StencilOrder::second);
  const auto b = forward_slice(kGrid, RealGrid(2 * eta), geo, 10.0, StencilOrder::second);
  EXPECT_LE((b - 2.0 * a).norm() / (2.0 * a).norm(), 0.03);
}

TEST(FarField, SheppLoganFiniteAndEnergetic) {
  const RealGrid eta = generate(kGrid, ScattererSpec::for_family(Family::shepp_logan), 2);
  const auto cube = forward_map(kGrid, eta, StencilOrder::second);
  for (const auto& s : cube.slices) {
    EXPECT_TRUE(s.allFinite());
    EXPECT_GT(s.norm(), 0.0);
  }
}

TEST(FarField, StencilOrdersAgreeOnSmoothMedium) {
  const auto spec = ScattererSpec::for_family(Family::gaussian2h);
  double prev = 1e300;
  for (int levels : {4, 5}) {
    GridSpec g = kGrid;
    g.tree.levels = levels;
    const RealGrid eta = generate(g, spec, 9);
    const auto geo = AcquisitionGeometry::for_grid(g);
    const auto l2 = forward_slice(g, eta, geo, 10.0, StencilOrder::second);
    const auto l4 = forward_slice(g, eta, geo, 10.0, StencilOrder::fourth);
    const double d = wbtest::rel_diff(l2, l4);
    EXPECT_LE(d, 0.10) << "n=" << g.n();
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(FarField, ReceiverOutsideGridRejected) {
  RealGrid eta = RealGrid::Zero(80, 80);
  eta(10, 10) = 0.1;
  AcquisitionGeometry geo = AcquisitionGeometry::for_grid(kGrid);
  geo.radius = 5.0;
  EXPECT_THROW(forward_slice(kGrid, eta, geo, 10.0, StencilOrder::second, {}, SamplingMode::receiver), ConfigError);
}
