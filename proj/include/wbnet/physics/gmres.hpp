#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

namespace wbnet {

struct GmresOptions {
  double tol = 1e-4;
  int restart = 10;
  int max_iter = 500;
};

template <class Scalar>
struct GmresResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  /// Relative residual estimate after every inner iteration.
  std::vector<double> residual_history;
  /// True relative residual at the end of every restart cycle.
  std::vector<double> cycle_residuals;
  int iterations = 0;
  bool converged = false;
  /// Arnoldi produced a (numerically) zero vector; the Krylov space is invariant.
  bool breakdown = false;

  double residual() const { return cycle_residuals.empty() ? 1.0 : cycle_residuals.back(); }
};

namespace detail {
template <class S>
double magnitude(S v) {
  return std::abs(v);
}
template <class S>
S conj_if(S v) {
  if constexpr (std::is_arithmetic_v<S>)
    return v;
  else
    return std::conj(v);
}
}  // namespace detail

/// Restarted GMRES with Givens rotations, zero initial guess. `apply(v, out)` computes out = A v.
template <class Scalar, class Apply>
GmresResult<Scalar> gmres(Apply&& apply, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                          const GmresOptions& opt = {}) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = b.size();
  const int m = std::max(1, opt.restart);
  GmresResult<Scalar> res;
  res.x = Vec::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    res.cycle_residuals.push_back(0.0);
    return res;
  }

  Vec r = b, w(n);
  double rnorm = bnorm;
  while (res.iterations < opt.max_iter) {
    Mat V(n, m + 1);
    Mat H = Mat::Zero(m + 1, m);
    std::vector<double> cs(m);
    std::vector<Scalar> sn(m);
    Vec g = Vec::Zero(m + 1);
    g(0) = rnorm;
    V.col(0) = r / rnorm;
    int k = 0;
    for (; k < m && res.iterations < opt.max_iter; ++k) {
      apply(V.col(k), w);
      ++res.iterations;
      for (int j = 0; j <= k; ++j) {  // modified Gram-Schmidt
        H(j, k) = V.col(j).dot(w);
        w -= H(j, k) * V.col(j);
      }
      const double hnext = w.norm();
      H(k + 1, k) = hnext;
      for (int j = 0; j < k; ++j) {
        const Scalar t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
        H(j + 1, k) = -detail::conj_if(sn[j]) * H(j, k) + cs[j] * H(j + 1, k);
        H(j, k) = t;
      }
      const Scalar a = H(k, k);
      const double aa = detail::magnitude(a), rr = std::hypot(aa, hnext);
      if (aa == 0.0) {
        cs[k] = 0.0;
        sn[k] = 1.0;
      } else {
        cs[k] = aa / rr;
        sn[k] = (a / aa) * hnext / rr;
      }
      H(k, k) = cs[k] * a + sn[k] * H(k + 1, k);
      H(k + 1, k) = 0.0;
      g(k + 1) = -detail::conj_if(sn[k]) * g(k);
      g(k) = cs[k] * g(k);
      const double est = detail::magnitude(g(k + 1)) / bnorm;
      res.residual_history.push_back(est);
      if (hnext <= 1e-14 * bnorm) {
        res.breakdown = true;
        ++k;
        break;
      }
      if (est <= opt.tol) {
        ++k;
        break;
      }
      V.col(k + 1) = w / hnext;
    }
    // Back substitution on the k x k triangle.
    Vec y = H.topLeftCorner(k, k).template triangularView<Eigen::Upper>().solve(g.head(k));
    res.x += V.leftCols(k) * y;
    apply(res.x, w);
    r = b - w;
    rnorm = r.norm();
    res.cycle_residuals.push_back(rnorm / bnorm);
    if (rnorm / bnorm <= opt.tol) {
      res.converged = true;
      break;
    }
    if (res.breakdown) break;
  }
  return res;
}

}  // namespace wbnet
