#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "wbnet/core/tensor.hpp"

namespace wbnet::nn {

struct GradCheckOptions {
  double step = 1e-6;
  std::size_t max_coords = 200;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  /// ||a - n|| / max(||a||, ||n||) over the sampled coordinates (worst block when combined).
  double max_rel_error = 0;
  /// Largest single-coordinate |a - n|, for diagnostics.
  double max_abs_error = 0;
  std::size_t checked = 0;
};

namespace detail {
struct ErrorAccumulator {
  double diff2 = 0, a2 = 0, n2 = 0, max_abs = 0;
  std::size_t count = 0;
  void add(double a, double n) {
    diff2 += (a - n) * (a - n);
    a2 += a * a;
    n2 += n * n;
    max_abs = std::max(max_abs, std::abs(a - n));
    ++count;
  }
  GradCheckResult result() const {
    const double denom = std::sqrt(std::max(a2, n2));
    return {denom > 0 ? std::sqrt(diff2) / denom : std::sqrt(diff2), max_abs, count};
  }
};

inline std::vector<std::size_t> sample_coords(std::size_t size, const GradCheckOptions& opt) {
  std::vector<std::size_t> coords(size);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  std::mt19937_64 rng(opt.seed);
  std::shuffle(coords.begin(), coords.end(), rng);
  coords.resize(std::min(coords.size(), opt.max_coords));
  return coords;
}
}  // namespace detail

/// Compares `analytic` with central differences of `loss` at up to max_coords randomly
/// chosen coordinates of x.
inline GradCheckResult gradient_check(std::vector<double>& x, const std::vector<double>& analytic,
                                      const std::function<double()>& loss, const GradCheckOptions& opt = {}) {
  detail::ErrorAccumulator acc;
  for (std::size_t k : detail::sample_coords(x.size(), opt)) {
    const double saved = x[k];
    x[k] = saved + opt.step;
    const double fp = loss();
    x[k] = saved - opt.step;
    const double fm = loss();
    x[k] = saved;
    acc.add(analytic[k], (fp - fm) / (2 * opt.step));
  }
  return acc.result();
}

/// Central differences of the probe loss <probe, y(x)> over sampled coordinates of x. Outputs
/// are differenced elementwise before the probe reduction, so outputs that do not depend on
/// the perturbed coordinate cancel exactly instead of contributing roundoff of the full sum.
template <class Forward>
GradCheckResult probe_gradient_check(std::vector<double>& x, const std::vector<double>& analytic,
                                     const Tensor<double>& probe, Forward forward, const GradCheckOptions& opt) {
  detail::ErrorAccumulator acc;
  for (std::size_t k : detail::sample_coords(x.size(), opt)) {
    const double saved = x[k];
    x[k] = saved + opt.step;
    const Tensor<double> yp = forward();
    x[k] = saved - opt.step;
    const Tensor<double> ym = forward();
    x[k] = saved;
    double diff = 0;
    for (std::size_t i = 0; i < yp.size(); ++i) diff += probe[i] * (yp[i] - ym[i]);
    acc.add(analytic[k], diff / (2 * opt.step));
  }
  return acc.result();
}

/// Checks a layer's parameter and input gradients with the probe loss <probe, layer(x)>.
/// `forward(params, in)` returns the output; `backward(params, grads, in, dout)` accumulates
/// parameter gradients and returns the input gradient. Returns the worse of the two errors.
template <class Forward, class Backward>
GradCheckResult gradient_check_layer(std::vector<double>& params, Tensor<double>& input, Forward forward,
                                     Backward backward, const GradCheckOptions& opt = {}) {
  const Tensor<double> out0 = forward(params.data(), input);
  Tensor<double> probe(out0.shape());
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> nd;
  for (auto& v : probe.storage()) v = nd(rng);
  std::vector<double> pgrad(params.size(), 0.0);
  const Tensor<double> din = backward(params.data(), pgrad.data(), input, probe);
  const auto run = [&] { return forward(params.data(), input); };
  const GradCheckResult a = probe_gradient_check(params, pgrad, probe, run, opt);
  const GradCheckResult b = probe_gradient_check(input.storage(), din.storage(), probe, run, opt);
  return {std::max(a.max_rel_error, b.max_rel_error), std::max(a.max_abs_error, b.max_abs_error),
          a.checked + b.checked};
}

}  // namespace wbnet::nn
