#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "wbnet/core/fft.hpp"
#include "wbnet/physics/far_field.hpp"
#include "wbnet/physics/gmres.hpp"

namespace wbnet {

/// Linearised far-field operator
///   (F eta)(s, r) = -omega^2 e^{i omega R} / sqrt(R) * sum_y h^2 e^{i omega (s - r).y} eta(y)
/// applied matrix-free through the separable factorisation E_s diag(eta) E_r^H.
class BornOperator {
 public:
  BornOperator(const GridSpec& grid, const AcquisitionGeometry& geo, double hertz)
      : grid_(grid), geo_(geo), omega_(angular(hertz)) {
    const int n = grid.n();
    const double h = grid.h();
    prefactor_ = -omega_ * omega_ * std::polar(1.0, omega_ * geo.radius) / std::sqrt(geo.radius) * (h * h);
    const auto phases = [&](int count, auto angle) {
      Eigen::MatrixXcd e(count, Eigen::Index(n) * n);
      for (int k = 0; k < count; ++k) {
        const double a = angle(k), cx = std::cos(a), cy = std::sin(a);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) e(k, i * n + j) = std::polar(1.0, omega_ * (cx * grid.node(i) + cy * grid.node(j)));
      }
      return e;
    };
    src_ = phases(geo.n_src, [&](int k) { return geo.src_angle(k); });
    rcv_ = phases(geo.n_rcv, [&](int k) { return geo.rcv_angle(k); });
  }

  const GridSpec& grid() const { return grid_; }
  const AcquisitionGeometry& geometry() const { return geo_; }
  double omega() const { return omega_; }
  cd prefactor() const { return prefactor_; }

  /// Accepts a real or complex pixel vector of length n^2 (row-major image).
  ComplexGrid apply_vector(const Eigen::Ref<const Eigen::VectorXcd>& eta) const {
    require_shape(eta.size() == src_.cols(), "born_apply: eta has wrong size");
    ComplexGrid out = prefactor_ * (src_ * eta.asDiagonal() * rcv_.adjoint());
    return out;
  }

  ComplexGrid apply(const RealGrid& eta) const {
    const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXd>(eta.data(), eta.size()).cast<cd>();
    return apply_vector(v);
  }

  /// F^* Lambda as a complex pixel vector.
  Eigen::VectorXcd adjoint(const ComplexGrid& lambda) const {
    require_shape(lambda.rows() == geo_.n_src && lambda.cols() == geo_.n_rcv, "born_adjoint: data has wrong shape");
    const Eigen::MatrixXcd lr = lambda * rcv_;  // n_src x N
    Eigen::VectorXcd out = (src_.conjugate().cwiseProduct(lr)).colwise().sum().transpose();
    return std::conj(prefactor_) * out;
  }

 private:
  GridSpec grid_;
  AcquisitionGeometry geo_;
  double omega_;
  cd prefactor_;
  Eigen::MatrixXcd src_, rcv_;  // rows: directions; cols: pixels
};

/// F^*F as a discrete convolution over pixel offsets, evaluated with zero-padded FFTs.
/// The kernel is |pref|^2 S_src(d) conj(S_rcv(d)) with S(d) = sum_k e^{i omega a_k . d}.
class NormalOperator {
 public:
  explicit NormalOperator(const BornOperator& op, double weight = 1.0) { add(op, weight); }

  /// Adds w * F^*F of another frequency (stacked multi-frequency normal equations).
  void add(const BornOperator& op, double weight) {
    const int n = op.grid().n();
    if (n_ == 0) {
      n_ = n;
      m_ = 2 * n;
      kernel_ = ComplexGrid::Zero(m_, m_);
    }
    require_shape(n == n_, "normal operator: grid mismatch");
    const double h = op.grid().h();
    const double w = op.omega();
    const auto& geo = op.geometry();
    const double scale = weight * std::norm(op.prefactor());
    ComplexGrid g = ComplexGrid::Zero(m_, m_);
    for (int a = -(n - 1); a <= n - 1; ++a)
      for (int b = -(n - 1); b <= n - 1; ++b) {
        // out_p = sum_q K(y_q - y_p) eta_q = sum_q G(p - q) eta_q with G(t) = K(-t).
        const double dx = -a * h, dy = -b * h;
        cd ss = 0, sr = 0;
        for (int k = 0; k < geo.n_src; ++k)
          ss += std::polar(1.0, w * (std::cos(geo.src_angle(k)) * dx + std::sin(geo.src_angle(k)) * dy));
        for (int k = 0; k < geo.n_rcv; ++k)
          sr += std::polar(1.0, w * (std::cos(geo.rcv_angle(k)) * dx + std::sin(geo.rcv_angle(k)) * dy));
        g((a + m_) % m_, (b + m_) % m_) = scale * ss * std::conj(sr);
      }
    fft2(g);
    kernel_ += g;
  }

  Eigen::VectorXcd apply(const Eigen::Ref<const Eigen::VectorXcd>& x) const {
    ComplexGrid pad = ComplexGrid::Zero(m_, m_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) pad(i, j) = x(i * n_ + j);
    fft2(pad);
    pad = pad.cwiseProduct(kernel_);
    fft2(pad, true);
    Eigen::VectorXcd out(Eigen::Index(n_) * n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) out(i * n_ + j) = pad(i, j);
    return out;
  }

 private:
  int n_ = 0, m_ = 0;
  ComplexGrid kernel_;
};

struct FbpOptions {
  double eps = 1e-3;
  GmresOptions gmres{1e-4, 10, 500};
  /// Data scale s: solves ((F/s)^*(F/s) + eps I) eta = (F/s)^* (Lambda/s), so eps is measured
  /// in standardised data units while eta keeps physical units.
  double data_scale = 1.0;
};

struct FbpResult {
  RealGrid image;
  double residual = 0;
  int iterations = 0;
  bool converged = false;
};

/// One term of the (possibly multi-frequency) normal equations.
struct FbpTerm {
  const BornOperator* op;
  const ComplexGrid* data;
  double weight = 1.0;
  double data_scale = 1.0;
};

/// Tikhonov-regularised filtered back-projection sum_i w_i ||F_i eta - Lambda_i||^2 + eps ||eta||^2
/// solved on the normal equations with restarted GMRES. Returns the real part.
inline FbpResult fbp_solve(const std::vector<FbpTerm>& terms, double eps, const GmresOptions& gopt) {
  if (!(eps > 0)) throw ConfigError("FBP regularisation must be positive");
  if (terms.empty()) throw ConfigError("FBP needs at least one frequency");
  const int n = terms.front().op->grid().n();
  NormalOperator normal(*terms.front().op, terms.front().weight / (terms.front().data_scale * terms.front().data_scale));
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(Eigen::Index(n) * n);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& term = terms[t];
    const double s2 = term.data_scale * term.data_scale;
    if (t > 0) normal.add(*term.op, term.weight / s2);
    rhs += (term.weight / s2) * term.op->adjoint(*term.data);
  }
  auto apply = [&](const Eigen::VectorXcd& v, Eigen::VectorXcd& out) { out = normal.apply(v) + eps * v; };
  const auto g = gmres<cd>(apply, rhs, gopt);
  FbpResult res;
  res.image = RealGrid(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) res.image(i, j) = g.x(i * n + j).real();
  res.residual = g.residual();
  res.iterations = g.iterations;
  res.converged = g.converged;
  return res;
}

inline FbpResult fbp_solve(const BornOperator& op, const ComplexGrid& lambda, const FbpOptions& opt = {}) {
  return fbp_solve({FbpTerm{&op, &lambda, 1.0, opt.data_scale}}, opt.eps, opt.gmres);
}

}  // namespace wbnet
