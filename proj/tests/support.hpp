#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <cmath>
#include <complex>
#include <random>

#include "wbnet/physics/far_field.hpp"

namespace wbtest {

using wbnet::cd;

/// Outgoing 2-D Green's function of (Delta + w^2): G = (i/4) H0^(1)(w r).
inline cd green(double omega, double r) {
  return cd(0, 0.25) * cd(std::cyl_bessel_j(0.0, omega * r), std::cyl_neumann(0.0, omega * r));
}

/// Relative l2 error of the discrete point-source response against G on the annulus
/// rmin <= |x - y| <= rmax. The source is a discrete delta at node (n/2, n/2).
inline double green_error(int n, double hertz, wbnet::StencilOrder order, const wbnet::PmlSpec& pml, double rmin,
                          double rmax) {
  wbnet::GridSpec g;
  g.tree = {1, n / 2};
  g.f_max = hertz;
  const wbnet::RealGrid eta = wbnet::RealGrid::Zero(n, n);
  wbnet::HelmholtzSolver solver(wbnet::assemble_system(g, eta, hertz, order, pml));
  const int c = n / 2;
  const double h = g.h();
  wbnet::ComplexGrid src = wbnet::ComplexGrid::Zero(n, n);
  src(c, c) = -1.0 / (h * h);
  const auto u = solver.physical(solver.solve_sources({src}).col(0));
  const double w = wbnet::angular(hertz);
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = std::hypot(g.node(i) - g.node(c), g.node(j) - g.node(c));
      if (r < rmin || r > rmax) continue;
      const cd G = green(w, r);
      num += std::norm(u(i, j) - G);
      den += std::norm(G);
    }
  return std::sqrt(num / den);
}

/// ||Lambda(s, r) - Lambda(-r, -s)|| / ||Lambda|| for aligned equispaced directions.
inline double reciprocity_error(const wbnet::ComplexGrid& lambda) {
  const int n = int(lambda.rows());
  double num = 0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) num += std::norm(lambda(k, l) - lambda((l + n / 2) % n, (k + n / 2) % n));
  return std::sqrt(num) / lambda.norm();
}

template <class A, class B>
double rel_diff(const A& a, const B& b) {
  return (a - b).norm() / b.norm();
}

}  // namespace wbtest
