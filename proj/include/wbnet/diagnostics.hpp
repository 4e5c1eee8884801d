#pragma once

// Invariant checks shared by the `selftest` and `gradcheck` subcommands and the acceptance run.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "wbnet/core/quadtree.hpp"
#include "wbnet/nn/gradcheck.hpp"
#include "wbnet/nn/widebnet.hpp"
#include "wbnet/physics/born.hpp"
#include "wbnet/physics/scatterers.hpp"

namespace wbnet::diag {

struct Check {
  std::string name;
  double value = 0;
  double bound = 0;

  bool pass() const { return std::isfinite(value) && value <= bound; }
};

namespace detail {

inline Tensor<double> random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double margin = 0) {
  std::normal_distribution<double> nd;
  Tensor<double> t(std::move(shape));
  for (auto& v : t.storage()) {
    v = nd(rng);
    if (margin > 0 && std::abs(v) < margin) v = v < 0 ? -margin : margin;
  }
  return t;
}

inline void randomise(nn::ParamStore<double>& store, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (auto& v : store.values()) v = scale * nd(rng);
}

}  // namespace detail

// ---- structural ----

/// Largest |x - detensorize(tensorize(x))| over random grids and every level.
inline Check tensorize_round_trip(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    const QuadTree tree{2 + t % 3, 1 + t % 5};
    RealGrid m(tree.n(), tree.n());
    for (auto& v : m.reshaped()) v = nd(rng);
    for (int l = tree.mid_level(); l <= tree.levels; ++l)
      worst = std::max(worst, (detensorize(tensorize(m, tree, l)) - m).cwiseAbs().maxCoeff());
  }
  return {"tensorize/detensorize round trip (max abs diff)", worst, 0.0};
}

inline Check space_to_depth_round_trip(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double mismatches = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t c = std::size_t(2) << (t % 3);
    const auto x = detail::random_tensor({1 + std::size_t(t % 3), c, c, 1 + std::size_t(t % 4)}, rng);
    mismatches += depth_to_space(space_to_depth(x)) != x;
    mismatches += space_to_depth(depth_to_space(space_to_depth(x))) != space_to_depth(x);
  }
  return {"space_to_depth/depth_to_space round trip (mismatches)", mismatches, 0.0};
}

inline Check switch_involution(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double mismatches = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t c = std::size_t(1) << (1 + t % 3), p = 1 + std::size_t(t % 4);
    const auto x = detail::random_tensor({1 + std::size_t(t % 2), c, c, c * c * p}, rng);
    mismatches += switch_permute(switch_permute(x)) != x;
  }
  return {"switch involution (mismatches)", mismatches, 0.0};
}

/// Closed-form parameter count against the registry built by the network, per config.
inline Check param_count_matches(const std::vector<nn::NetworkConfig>& configs) {
  double mismatches = 0;
  for (const auto& c : configs) {
    const nn::WideBNet<float> net(c);
    std::size_t sum = 0;
    for (const auto& e : net.params().entries()) sum += e.size;
    mismatches += sum != nn::param_count(c) || sum != net.params().size();
  }
  return {"param_count == registry over " + std::to_string(configs.size()) + " configs (mismatches)", mismatches, 0.0};
}

inline std::vector<nn::NetworkConfig> sample_configs() {
  std::vector<nn::NetworkConfig> out;
  for (auto v : {nn::Variant::wide, nn::Variant::narrow, nn::Variant::switchless}) {
    nn::NetworkConfig full;
    full.variant = v;
    nn::NetworkConfig desk = full;
    desk.levels = 3;
    desk.leaf = 4;
    nn::NetworkConfig tiny = full;
    tiny.levels = 2;
    tiny.leaf = 2;
    tiny.rank = 2;
    nn::NetworkConfig odd = desk;
    odd.leaf = 2;
    odd.rank = 8;
    odd.n_cnn = 1;
    odd.n_rnn = 0;
    odd.conv_kernel = 3;
    out.insert(out.end(), {full, desk, tiny, odd});
  }
  return out;
}

// ---- physics ----

/// Outgoing 2-D Green's function of (Delta + w^2): (i/4) H0^(1)(w r).
inline cd green(double omega, double r) {
  return cd(0, 0.25) * cd(std::cyl_bessel_j(0.0, omega * r), std::cyl_neumann(0.0, omega * r));
}

/// Relative l2 error of the discrete point-source response (delta at node (n/2, n/2)) against
/// the analytic Green's function over rmin <= |x - y| <= rmax.
inline double green_error(int n, double hertz, StencilOrder order, const PmlSpec& pml, double rmin, double rmax) {
  GridSpec g;
  g.tree = {1, n / 2};
  g.f_max = hertz;
  HelmholtzSolver solver(assemble_system(g, RealGrid::Zero(n, n), hertz, order, pml));
  const int c = n / 2;
  ComplexGrid src = ComplexGrid::Zero(n, n);
  src(c, c) = -1.0 / (g.h() * g.h());
  const auto u = solver.physical(solver.solve_sources({src}).col(0));
  const double w = angular(hertz);
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = std::hypot(g.node(i) - g.node(c), g.node(j) - g.node(c));
      if (r < rmin || r > rmax) continue;
      num += std::norm(u(i, j) - green(w, r));
      den += std::norm(green(w, r));
    }
  return std::sqrt(num / den);
}

/// ||Lambda(s, r) - Lambda(-r, -s)|| / ||Lambda|| for aligned equispaced directions.
inline double reciprocity_error(const ComplexGrid& lambda) {
  const int n = int(lambda.rows());
  double num = 0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) num += std::norm(lambda(k, l) - lambda((l + n / 2) % n, (k + n / 2) % n));
  return std::sqrt(num) / lambda.norm();
}

/// Worst |<F x, y> - <x, F^* y>| / (||F x|| ||y||) over random complex pairs.
inline double born_adjoint_error(const GridSpec& grid, double hertz, int pairs, std::uint64_t seed) {
  const BornOperator F(grid, AcquisitionGeometry::for_grid(grid), hertz);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const Eigen::Index n = grid.n();
  double worst = 0;
  for (int t = 0; t < pairs; ++t) {
    Eigen::VectorXcd x(n * n);
    ComplexGrid y(n, n);
    for (auto& v : x) v = {nd(rng), nd(rng)};
    for (auto& v : y.reshaped()) v = {nd(rng), nd(rng)};
    const ComplexGrid fx = F.apply_vector(x);
    const cd lhs = Eigen::Map<const Eigen::VectorXcd>(fx.data(), fx.size()).dot(Eigen::Map<const Eigen::VectorXcd>(y.data(), y.size()));
    const cd rhs = x.dot(F.adjoint(y));
    worst = std::max(worst, std::abs(lhs - rhs) / (fx.norm() * y.norm()));
  }
  return worst;
}

/// GMRES against a dense LU solve on a well-conditioned random system.
inline Check gmres_vs_lu(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd A(60, 60);
  for (auto& v : A.reshaped()) v = cd(nd(rng), nd(rng)) / std::sqrt(60.0);
  A += cd(3, 1) * Eigen::MatrixXcd::Identity(60, 60);
  Eigen::VectorXcd b(60);
  for (auto& v : b) v = {nd(rng), nd(rng)};
  const Eigen::VectorXcd ref = A.partialPivLu().solve(b);
  const auto r = gmres<cd>([&](const Eigen::VectorXcd& v, Eigen::VectorXcd& out) { out = A * v; }, b, {1e-10, 10, 1000});
  return {"GMRES vs dense LU (rel diff)", r.converged ? (r.x - ref).norm() / ref.norm() : INFINITY, 1e-8};
}

// ---- gradients ----

/// Every layer type in float64 against central differences; bound 1e-6.
inline std::vector<Check> layer_gradient_checks(std::uint64_t seed) {
  using nn::ParamStore;
  std::mt19937_64 rng(seed);
  std::vector<Check> out;
  nn::GradCheckOptions opt;
  opt.seed = seed;
  const auto add = [&](const std::string& name, const nn::GradCheckResult& r) {
    out.push_back({"gradient " + name + " (rel error)", r.checked ? r.max_rel_error : INFINITY, 1e-6});
  };
  {
    ParamStore<double> s;
    const auto lc = nn::LocallyConnected<double>::make(s, "lc", 4, 4, 6, 3);
    detail::randomise(s, seed + 1);
    auto x = detail::random_tensor({3, 4, 4, 6}, rng);
    add("locally connected", nn::gradient_check_layer(
                                 s.values(), x, [&](const double* p, const Tensor<double>& in) { return lc.forward(p, in); },
                                 [&](const double* p, double* g, const Tensor<double>& in, const Tensor<double>& d) {
                                   return lc.backward(p, g, in, d);
                                 },
                                 opt));
  }
  {
    ParamStore<double> s;
    const auto conv = nn::Conv2dPeriodic<double>::make(s, "conv", 5, 3, 2);
    detail::randomise(s, seed + 2);
    auto x = detail::random_tensor({2, 6, 7, 3}, rng);
    add("periodic conv", nn::gradient_check_layer(
                             s.values(), x, [&](const double* p, const Tensor<double>& in) { return conv.forward(p, in); },
                             [&](const double* p, double* g, const Tensor<double>& in, const Tensor<double>& d) {
                               return conv.backward(p, g, in, d);
                             },
                             opt));
  }
  {
    ParamStore<double> s;
    const auto block = nn::ResidualBlock<double>::make(s, "res", 2, 2, 5);
    detail::randomise(s, seed + 3);
    auto x = detail::random_tensor({2, 2, 2, 5}, rng);
    add("residual block", nn::gradient_check_layer(
                              s.values(), x, [&](const double* p, const Tensor<double>& in) { return block.forward(p, in); },
                              [&](const double* p, double* g, const Tensor<double>& in, const Tensor<double>& d) {
                                typename nn::ResidualBlock<double>::Cache c;
                                block.forward(p, in, &c);
                                return block.backward(p, g, in, c, d);
                              },
                              opt));
  }
  std::vector<double> none;
  {
    auto x = detail::random_tensor({2, 3, 3, 4}, rng, 1e-3);
    add("relu", nn::gradient_check_layer(
                    none, x, [](const double*, const Tensor<double>& in) { return nn::relu(in); },
                    [](const double*, double*, const Tensor<double>& in, const Tensor<double>& d) {
                      return nn::relu_backward(in, d);
                    },
                    opt));
  }
  {
    auto x = detail::random_tensor({2, 4, 4, 32}, rng);
    add("switch", nn::gradient_check_layer(
                      none, x, [](const double*, const Tensor<double>& in) { return switch_permute(in); },
                      [](const double*, double*, const Tensor<double>&, const Tensor<double>& d) { return switch_permute(d); },
                      opt));
  }
  {
    auto x = detail::random_tensor({2, 4, 4, 3}, rng);
    add("space_to_depth", nn::gradient_check_layer(
                              none, x, [](const double*, const Tensor<double>& in) { return space_to_depth(in); },
                              [](const double*, double*, const Tensor<double>&, const Tensor<double>& d) {
                                return depth_to_space(d);
                              },
                              opt));
  }
  {
    auto x = detail::random_tensor({2, 2, 2, 8}, rng);
    add("depth_to_space", nn::gradient_check_layer(
                              none, x, [](const double*, const Tensor<double>& in) { return depth_to_space(in); },
                              [](const double*, double*, const Tensor<double>&, const Tensor<double>& d) {
                                return space_to_depth(d);
                              },
                              opt));
  }
  {
    auto x = detail::random_tensor({2, 2, 2, 3}, rng);
    add("concat/split", nn::gradient_check_layer(
                            none, x,
                            [](const double*, const Tensor<double>& in) {
                              Tensor<double> twice = in;
                              for (auto& v : twice.storage()) v *= 2;
                              return nn::concat_channels(in, twice);
                            },
                            [](const double*, double*, const Tensor<double>&, const Tensor<double>& d) {
                              auto [a, b] = nn::split_channels(d, 3);
                              for (std::size_t k = 0; k < a.size(); ++k) a[k] += 2 * b[k];
                              return a;
                            },
                            opt));
  }
  return out;
}

/// End-to-end check of a tiny network (L=2, s=2, r=2) with random biases; bound 1e-5.
inline Check network_gradient_check(nn::Variant v, std::uint64_t seed) {
  nn::NetworkConfig c;
  c.levels = 2;
  c.leaf = 2;
  c.rank = 2;
  c.variant = v;
  nn::WideBNet<double> net(c);
  net.params().glorot_init(seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> nd;
  for (const auto& e : net.params().entries())
    if (e.fan_in == 0)
      for (std::size_t k = 0; k < e.size; ++k) net.params().values()[e.offset + k] = 0.1 * nd(rng);
  nn::NetworkInput<double> in;
  for (int l : c.input_levels()) {
    const std::size_t cells = std::size_t(1) << l;
    in.push_back(detail::random_tensor({2, cells, cells, c.input_channels(l)}, rng));
  }
  typename nn::WideBNet<double>::Cache cache;
  const auto y = net.forward(in, &cache);
  Tensor<double> probe(y.shape());
  for (auto& p : probe.storage()) p = nd(rng);
  std::vector<double> grads(net.params().size(), 0.0);
  net.backward(net.params().data(), grads.data(), cache, probe);
  nn::GradCheckOptions opt;
  opt.seed = seed + 2;
  const auto r = nn::probe_gradient_check(net.params().values(), grads, probe, [&] { return net.forward(in); }, opt);
  return {"gradient end-to-end tiny " + nn::to_string(v) + " (rel error)", r.checked ? r.max_rel_error : INFINITY, 1e-5};
}

/// Quick M1-M5 invariant suite (a few seconds).
inline std::vector<Check> selftest(std::uint64_t seed = 1) {
  std::vector<Check> out{tensorize_round_trip(100, seed), space_to_depth_round_trip(100, seed + 1),
                         switch_involution(100, seed + 2), param_count_matches(sample_configs())};
  const GridSpec full = GridSpec::with_ppw({4, 5});
  out.push_back({"Green's function n=80 10 Hz order 4 (rel l2)",
                 green_error(80, 10.0, StencilOrder::fourth, {}, 2 * full.h(), 0.5), 0.05});
  const GridSpec desk = GridSpec::with_ppw({3, 4});
  const RealGrid eta = generate(desk, ScattererSpec::for_family(Family::squares), seed);
  out.push_back({"reciprocity n=32 Squares (rel)",
                 reciprocity_error(forward_slice(desk, eta, AcquisitionGeometry::for_grid(desk), desk.f_max,
                                                 StencilOrder::fourth)),
                 0.05});
  out.push_back({"Born adjoint dot product (rel)", born_adjoint_error(desk, desk.f_max, 10, seed), 1e-10});
  out.push_back(gmres_vs_lu(seed));
  for (auto& c : layer_gradient_checks(seed)) out.push_back(c);
  out.push_back(network_gradient_check(nn::Variant::wide, seed));
  return out;
}

}  // namespace wbnet::diag
