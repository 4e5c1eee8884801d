#pragma once

#include <cmath>
#include <vector>

#include "wbnet/core/errors.hpp"
#include "wbnet/core/tensor.hpp"

namespace wbnet::pipeline {

/// Normalised 1-D Gaussian taps on [-R, R], R = ceil(4 width). The 2-D kernel is the
/// outer product, so it has unit sum and is truncated at 4 widths along each axis.
inline std::vector<double> gaussian_taps(double width) {
  if (!(width > 0)) throw ConfigError("smoothing width must be positive");
  const int R = int(std::ceil(4.0 * width));
  std::vector<double> w(std::size_t(2 * R + 1));
  double sum = 0;
  for (int d = -R; d <= R; ++d) sum += w[std::size_t(d + R)] = std::exp(-0.5 * d * d / (width * width));
  for (double& v : w) v /= sum;
  return w;
}

/// Circular Gaussian smoothing of a target image.
inline RealGrid smooth_target(const RealGrid& eta, double width = 0.75) {
  const auto w = gaussian_taps(width);
  const int R = int(w.size() / 2), n = int(eta.rows()), m = int(eta.cols());
  const auto wrap = [](int i, int p) { return ((i % p) + p) % p; };
  RealGrid rows = RealGrid::Zero(n, m), out = RealGrid::Zero(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      for (int d = -R; d <= R; ++d) rows(i, j) += w[std::size_t(d + R)] * eta(i, wrap(j + d, m));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      for (int d = -R; d <= R; ++d) out(i, j) += w[std::size_t(d + R)] * rows(wrap(i + d, n), j);
  return out;
}

/// Batch loss (1/B) sum_b sum_x (pred - target)^2 for pred [B, n, n, 1]; fills dL/dpred if asked.
template <class T>
double batch_loss(const Tensor<T>& pred, const std::vector<const RealGrid*>& targets, Tensor<T>* dpred = nullptr) {
  require_shape(pred.rank() == 4 && pred.dim(3) == 1 && pred.dim(0) == targets.size(),
                "batch_loss: prediction " + shape_string(pred.shape()) + " vs " + std::to_string(targets.size()) +
                    " targets");
  const std::size_t B = pred.dim(0), n = pred.dim(1), m = pred.dim(2);
  if (dpred) *dpred = Tensor<T>(pred.shape());
  double total = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const RealGrid& t = *targets[b];
    require_shape(std::size_t(t.rows()) == n && std::size_t(t.cols()) == m, "batch_loss: target size mismatch");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double r = double(pred(b, i, j, 0)) - t(Eigen::Index(i), Eigen::Index(j));
        total += r * r;
        if (dpred) (*dpred)(b, i, j, 0) = T(2.0 * r / double(B));
      }
  }
  return total / double(B);
}

inline double mse_per_pixel(const RealGrid& pred, const RealGrid& target) {
  require_shape(pred.rows() == target.rows() && pred.cols() == target.cols(), "mse: size mismatch");
  return (pred - target).squaredNorm() / double(pred.size());
}

/// Relative squared l2 error ||pred - target||^2 / ||target||^2.
inline double rel_l2(const RealGrid& pred, const RealGrid& target) {
  require_shape(pred.rows() == target.rows() && pred.cols() == target.cols(), "rel_l2: size mismatch");
  const double den = target.squaredNorm();
  if (den == 0) throw DataError("relative error against an all-zero target");
  return (pred - target).squaredNorm() / den;
}

}  // namespace wbnet::pipeline
