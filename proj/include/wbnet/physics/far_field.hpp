#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "wbnet/core/parallel.hpp"
#include "wbnet/physics/helmholtz.hpp"

namespace wbnet {

/// How scattered fields are turned into receiver data.
enum class SamplingMode {
  /// Asymptotic far field at radius R evaluated from the discrete solution through the
  /// volume representation: Lambda(s,r) = -omega^2 e^{i omega R}/sqrt(R) sum_y h^2
  /// e^{-i omega r.y} eta(y) (e^{i omega s.y} + u_s(y)). Same normalisation as the Born operator.
  far_field,
  /// u_s(R r) bilinearly interpolated from the computational grid.
  receiver,
};

/// Scattering data: one n_src x n_rcv complex slice per frequency.
struct FarFieldCube {
  std::vector<ComplexGrid> slices;
  std::vector<double> hertz;
  int stencil_order = 2;

  std::size_t frequencies() const { return slices.size(); }
};

namespace detail {

inline cd bilinear(const HelmholtzSolver& solver, const Eigen::Ref<const Eigen::VectorXcd>& u, double x, double y) {
  const auto& sys = solver.system();
  const double h = sys.grid.h();
  // Computational coordinate of (x, y): coord(I) = domain_min + (I - pml + 0.5) h.
  const double tx = (x - sys.grid.domain_min) / h + sys.pml - 0.5;
  const double ty = (y - sys.grid.domain_min) / h + sys.pml - 0.5;
  const int I = int(std::floor(tx)), J = int(std::floor(ty));
  if (I < 0 || J < 0 || I + 1 >= sys.side || J + 1 >= sys.side)
    throw ConfigError("receiver at (" + std::to_string(x) + "," + std::to_string(y) + ") outside computational grid");
  const double ax = tx - I, ay = ty - J;
  return (1 - ax) * (1 - ay) * u(sys.index(I, J)) + ax * (1 - ay) * u(sys.index(I + 1, J)) +
         (1 - ax) * ay * u(sys.index(I, J + 1)) + ax * ay * u(sys.index(I + 1, J + 1));
}

}  // namespace detail

namespace detail {

// Far-field data for the fields in `u` (one column per source angle), as the product
// pref * Q * E^H with Q(k, p) the contrast source eta * (u_inc + u_s) of source k at
// support pixel p and E(r, p) = e^{i omega r.y_p}.
inline ComplexGrid far_field_rows(const HelmholtzSolver& solver, const RealGrid& eta, const Eigen::MatrixXcd& u,
                                  const std::vector<double>& src_angles, const AcquisitionGeometry& geo) {
  const auto& sys = solver.system();
  const int n = sys.grid.n();
  const double w = sys.omega();
  const double h = sys.grid.h();
  const cd pref = -w * w * std::polar(1.0, w * geo.radius) / std::sqrt(geo.radius) * (h * h);
  std::vector<int> pi, pj;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (eta(i, j) != 0.0) {
        pi.push_back(i);
        pj.push_back(j);
      }
  const Eigen::Index P = Eigen::Index(pi.size()), S = Eigen::Index(src_angles.size());
  Eigen::MatrixXcd q(S, P), e(geo.n_rcv, P);
  for (Eigen::Index k = 0; k < S; ++k) {
    const double sx = std::cos(src_angles[k]), sy = std::sin(src_angles[k]);
    for (Eigen::Index p = 0; p < P; ++p) {
      const double x = sys.grid.node(pi[p]), y = sys.grid.node(pj[p]);
      q(k, p) = eta(pi[p], pj[p]) * (std::polar(1.0, w * (sx * x + sy * y)) + u(sys.index(sys.comp(pi[p]), sys.comp(pj[p])), k));
    }
  }
  for (int r = 0; r < geo.n_rcv; ++r) {
    const double a = geo.rcv_angle(r), rx = std::cos(a), ry = std::sin(a);
    for (Eigen::Index p = 0; p < P; ++p) e(r, p) = std::polar(1.0, w * (rx * sys.grid.node(pi[p]) + ry * sys.grid.node(pj[p])));
  }
  ComplexGrid out = pref * (q * e.adjoint());
  return out;
}

}  // namespace detail

/// One row Lambda(s, .) of the data for the field `u` (computational grid) scattered from
/// plane-wave angle `src_angle`.
inline std::vector<cd> sample_far_field(const HelmholtzSolver& solver, const RealGrid& eta,
                                        const Eigen::Ref<const Eigen::VectorXcd>& u, double src_angle,
                                        const AcquisitionGeometry& geo, SamplingMode mode = SamplingMode::far_field) {
  std::vector<cd> row(std::size_t(geo.n_rcv));
  if (mode == SamplingMode::receiver) {
    for (int r = 0; r < geo.n_rcv; ++r) {
      const double a = geo.rcv_angle(r);
      row[r] = detail::bilinear(solver, u, geo.radius * std::cos(a), geo.radius * std::sin(a));
    }
    return row;
  }
  const Eigen::MatrixXcd field = u;
  const ComplexGrid one = detail::far_field_rows(solver, eta, field, {src_angle}, geo);
  for (int r = 0; r < geo.n_rcv; ++r) row[r] = one(0, r);
  return row;
}

/// Data slice at one frequency: one factorisation, all source directions.
inline ComplexGrid forward_slice(const GridSpec& grid, const RealGrid& eta, const AcquisitionGeometry& geo,
                                 double hertz, StencilOrder order, const PmlSpec& pml = {},
                                 SamplingMode mode = SamplingMode::far_field) {
  ComplexGrid lambda = ComplexGrid::Zero(geo.n_src, geo.n_rcv);
  if (eta.cwiseAbs().maxCoeff() == 0.0 && mode == SamplingMode::far_field) return lambda;
  HelmholtzSolver solver(assemble_system(grid, eta, hertz, order, pml));
  std::vector<double> angles(std::size_t(geo.n_src));
  for (int k = 0; k < geo.n_src; ++k) angles[k] = geo.src_angle(k);
  const Eigen::MatrixXcd fields = solver.solve_plane_waves(eta, angles);
  if (mode == SamplingMode::far_field) {
    lambda = detail::far_field_rows(solver, eta, fields, angles, geo);
  } else {
    for (int k = 0; k < geo.n_src; ++k) {
      const auto row = sample_far_field(solver, eta, fields.col(k), angles[k], geo, mode);
      for (int r = 0; r < geo.n_rcv; ++r) lambda(k, r) = row[r];
    }
  }
  if (!lambda.allFinite()) throw NumericalError("non-finite scattering data");
  return lambda;
}

/// Multi-frequency forward map F[eta].
inline FarFieldCube forward_map(const GridSpec& grid, const RealGrid& eta, const AcquisitionGeometry& geo,
                                const std::vector<double>& hertz, StencilOrder order, const PmlSpec& pml = {},
                                SamplingMode mode = SamplingMode::far_field) {
  FarFieldCube cube;
  cube.hertz = hertz;
  cube.stencil_order = int(order);
  for (double f : hertz) cube.slices.push_back(forward_slice(grid, eta, geo, f, order, pml, mode));
  return cube;
}

inline FarFieldCube forward_map(const GridSpec& grid, const RealGrid& eta, StencilOrder order) {
  std::vector<double> hz;
  for (const auto& f : grid.frequencies()) hz.push_back(f.hertz);
  return forward_map(grid, eta, AcquisitionGeometry::for_grid(grid), hz, order);
}

}  // namespace wbnet
