#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "wbnet/core/grid.hpp"
#include "wbnet/core/tensor.hpp"

namespace wbnet {

using cd = std::complex<double>;

enum class StencilOrder { second = 2, fourth = 4 };

inline StencilOrder stencil_from_int(int order) {
  if (order == 2) return StencilOrder::second;
  if (order == 4) return StencilOrder::fourth;
  throw ConfigError("stencil order must be 2 or 4, got " + std::to_string(order));
}

/// Absorbing layer: quadratic profile sigma(d) = intensity * (d / thickness)^2 applied as the
/// complex stretch s = 1 + i sigma / omega. Width is measured in grid points; width <= 0
/// means "`wavelengths` wavelengths at the solve frequency".
struct PmlSpec {
  int width = 0;
  double intensity = 80.0;
  double wavelengths = 1.0;

  int points(const GridSpec& grid, double hertz) const {
    if (width > 0) return width;
    return std::max(1, int(std::lround(wavelengths / (hertz * grid.h()))));
  }
};

/// Plane-wave directions and receivers, equispaced on [0, 2pi) and aligned with each other.
struct AcquisitionGeometry {
  int n_src = 80;
  int n_rcv = 80;
  double radius = 0.5;

  static AcquisitionGeometry for_grid(const GridSpec& g) { return {g.n(), g.n(), 0.5 * g.length()}; }

  double src_angle(int k) const { return 2.0 * std::numbers::pi * k / n_src; }
  double rcv_angle(int k) const { return 2.0 * std::numbers::pi * k / n_rcv; }
};

/// Assembled operator on the computational grid: imaging grid padded by `pml` nodes per side.
/// Node (I, J) has unknown index I * side + J; I runs along x, J along y.
struct HelmholtzSystem {
  GridSpec grid;
  double hertz = 0;
  StencilOrder order = StencilOrder::second;
  int pml = 0;
  int side = 0;
  Eigen::SparseMatrix<cd> matrix;
  // Maps a physical source term onto the discrete right-hand side (identity for order 2
  // in the physical region, the compact mass operator for order 4).
  Eigen::SparseMatrix<cd> rhs_operator;

  double omega() const { return angular(hertz); }
  int index(int I, int J) const { return I * side + J; }
  /// Computational index of imaging node i.
  int comp(int i) const { return i + pml; }
  double coord(int I) const { return grid.domain_min + (I - pml + 0.5) * grid.h(); }
};

namespace detail {

// Distance into the absorbing layer of the (possibly half-integer) computational position t.
inline double pml_depth(double t, int pml, int n, double h) {
  const double lo = pml - t;
  const double hi = t - (pml + n - 1);
  return std::max({0.0, lo, hi}) * h;
}

inline cd stretch(double t, int pml, int n, double h, double intensity, double omega) {
  if (pml == 0) return 1.0;
  const double d = pml_depth(t, pml, n, h) / (pml * h);
  return {1.0, intensity * d * d / omega};
}

// 1-D operator d/dx (1/s d/dx) with homogeneous Dirichlet closure, symmetric.
inline Eigen::SparseMatrix<cd> stretched_second_difference(int side, int pml, int n, double h, double intensity,
                                                           double omega) {
  std::vector<Eigen::Triplet<cd>> trip;
  trip.reserve(3 * side);
  const double inv_h2 = 1.0 / (h * h);
  for (int I = 0; I < side; ++I) {
    const cd left = 1.0 / stretch(I - 0.5, pml, n, h, intensity, omega);
    const cd right = 1.0 / stretch(I + 0.5, pml, n, h, intensity, omega);
    trip.emplace_back(I, I, -(left + right) * inv_h2);
    if (I > 0) trip.emplace_back(I, I - 1, left * inv_h2);
    if (I + 1 < side) trip.emplace_back(I, I + 1, right * inv_h2);
  }
  Eigen::SparseMatrix<cd> m(side, side);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

inline Eigen::SparseMatrix<cd> kron(const Eigen::SparseMatrix<cd>& a, const Eigen::SparseMatrix<cd>& b) {
  std::vector<Eigen::Triplet<cd>> trip;
  trip.reserve(std::size_t(a.nonZeros()) * std::size_t(b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (Eigen::SparseMatrix<cd>::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (Eigen::SparseMatrix<cd>::InnerIterator ib(b, kb); ib; ++ib)
          trip.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(), ia.value() * ib.value());
  Eigen::SparseMatrix<cd> m(a.rows() * b.rows(), a.cols() * b.cols());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

inline Eigen::SparseMatrix<cd> diagonal(const std::vector<cd>& d) {
  Eigen::SparseMatrix<cd> m(Eigen::Index(d.size()), Eigen::Index(d.size()));
  std::vector<Eigen::Triplet<cd>> trip;
  for (std::size_t i = 0; i < d.size(); ++i) trip.emplace_back(int(i), int(i), d[i]);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace detail

/// Discretises (Delta + omega^2 (1 + eta)) u = f with PML stretching, multiplied through by
/// s_x s_y so the order-2 operator is complex symmetric.
///
/// Order 2 is the 5-point Laplacian. Order 4 is the compact 9-point scheme
///   D_x + D_y + h^2/6 D_x D_y + omega^2 (I + h^2/12 (D_x + D_y)) diag(m)
/// with right-hand side (I + h^2/12 (D_x + D_y)) f.
inline HelmholtzSystem assemble_system(const GridSpec& grid, const RealGrid& eta, double hertz, StencilOrder order,
                                       const PmlSpec& pml_spec = {}) {
  if (!(hertz > 0)) throw ConfigError("solve frequency must be positive");
  const int n = grid.n();
  require_shape(eta.rows() == n && eta.cols() == n, "assemble_system: eta does not match grid");
  if (!(pml_spec.intensity > 0)) throw ConfigError("PML intensity must be positive");
  const int pml = pml_spec.points(grid, hertz);
  if (pml > 4 * n) throw ConfigError("PML width " + std::to_string(pml) + " exceeds the grid extension budget");

  HelmholtzSystem sys;
  sys.grid = grid;
  sys.hertz = hertz;
  sys.order = order;
  sys.pml = pml;
  sys.side = n + 2 * pml;
  const int side = sys.side;
  const double h = grid.h();
  const double omega = sys.omega();
  const double k2 = omega * omega;

  const auto p1 = detail::stretched_second_difference(side, pml, n, h, pml_spec.intensity, omega);
  std::vector<cd> s1(side);
  for (int I = 0; I < side; ++I) s1[I] = detail::stretch(I, pml, n, h, pml_spec.intensity, omega);
  Eigen::SparseMatrix<cd> eye(side, side);
  eye.setIdentity();
  const auto s_diag = detail::diagonal(s1);

  const Eigen::SparseMatrix<cd> px = detail::kron(p1, eye);
  const Eigen::SparseMatrix<cd> py = detail::kron(eye, p1);
  const Eigen::SparseMatrix<cd> sx = detail::kron(s_diag, eye);
  const Eigen::SparseMatrix<cd> sy = detail::kron(eye, s_diag);

  std::vector<cd> m(std::size_t(side) * side, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[sys.index(sys.comp(i), sys.comp(j))] = 1.0 + eta(i, j);
  const auto m_diag = detail::diagonal(m);

  const Eigen::SparseMatrix<cd> lap = Eigen::SparseMatrix<cd>(sy * px) + Eigen::SparseMatrix<cd>(sx * py);
  const Eigen::SparseMatrix<cd> sxy = sx * sy;
  if (order == StencilOrder::second) {
    sys.matrix = lap + k2 * Eigen::SparseMatrix<cd>(sxy * m_diag);
    sys.rhs_operator = sxy;
  } else {
    const Eigen::SparseMatrix<cd> mass = sxy + (h * h / 12.0) * lap;
    sys.matrix = lap + (h * h / 6.0) * Eigen::SparseMatrix<cd>(px * py) + k2 * Eigen::SparseMatrix<cd>(mass * m_diag);
    sys.rhs_operator = mass;
  }
  sys.matrix.makeCompressed();
  return sys;
}

/// Sparse LU of one assembled system; factor once, solve for any number of right-hand sides.
class HelmholtzSolver {
 public:
  explicit HelmholtzSolver(HelmholtzSystem sys) : sys_(std::move(sys)) {
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<cd>, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(sys_.matrix);
    lu_->factorize(sys_.matrix);
    if (lu_->info() != Eigen::Success)
      throw NumericalError("sparse LU factorisation failed: " + lu_->lastErrorMessage());
  }

  const HelmholtzSystem& system() const { return sys_; }

  /// Solves with physical source terms (n x n each, one per column of the result).
  /// Returns the fields on the computational grid, one column per source.
  Eigen::MatrixXcd solve_sources(const std::vector<ComplexGrid>& sources) const {
    const int n = sys_.grid.n();
    const Eigen::Index dofs = Eigen::Index(sys_.side) * sys_.side;
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(dofs, Eigen::Index(sources.size()));
    for (std::size_t c = 0; c < sources.size(); ++c) {
      require_shape(sources[c].rows() == n && sources[c].cols() == n, "source term does not match grid");
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f(sys_.index(sys_.comp(i), sys_.comp(j)), Eigen::Index(c)) = sources[c](i, j);
    }
    const Eigen::MatrixXcd rhs = sys_.rhs_operator * f;
    // Column by column, so each field is bit-identical to a single-source solve.
    Eigen::MatrixXcd u(rhs.rows(), rhs.cols());
    for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
      const Eigen::VectorXcd col = rhs.col(c);
      u.col(c) = lu_->solve(col);
      if (lu_->info() != Eigen::Success) throw NumericalError("sparse LU solve failed");
    }
    const double res = (sys_.matrix * u - rhs).norm();
    const double ref = rhs.norm();
    if (ref > 0 && !(res <= 1e-8 * ref))
      throw NumericalError("Helmholtz solve residual " + std::to_string(res / ref) + " above 1e-8");
    return u;
  }

  /// Scattered field for plane-wave direction (cos a, sin a): source -omega^2 eta e^{i omega s.x}
  /// restricted to the imaging region.
  Eigen::MatrixXcd solve_plane_waves(const RealGrid& eta, const std::vector<double>& angles) const {
    std::vector<ComplexGrid> sources;
    sources.reserve(angles.size());
    for (double a : angles) sources.push_back(plane_wave_source(eta, a));
    return solve_sources(sources);
  }

  ComplexGrid plane_wave_source(const RealGrid& eta, double angle) const {
    const int n = sys_.grid.n();
    const double w = sys_.omega();
    const double sx = std::cos(angle), sy = std::sin(angle);
    ComplexGrid f(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double phase = w * (sx * sys_.grid.node(i) + sy * sys_.grid.node(j));
        f(i, j) = -w * w * eta(i, j) * std::polar(1.0, phase);
      }
    return f;
  }

  /// Restricts a computational-grid field to the imaging grid.
  ComplexGrid physical(const Eigen::Ref<const Eigen::VectorXcd>& u) const {
    const int n = sys_.grid.n();
    ComplexGrid out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = u(sys_.index(sys_.comp(i), sys_.comp(j)));
    return out;
  }

 private:
  HelmholtzSystem sys_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<cd>, Eigen::COLAMDOrdering<int>>> lu_;
};

/// Convenience wrapper: factor and return the scattered field for one direction on the
/// computational grid.
inline Eigen::VectorXcd solve_scattered(const HelmholtzSystem& sys, const RealGrid& eta, double angle) {
  HelmholtzSolver solver(sys);
  return solver.solve_plane_waves(eta, {angle}).col(0);
}

}  // namespace wbnet
