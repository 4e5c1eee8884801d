#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wbnet/nn/widebnet.hpp"
#include "wbnet/pipeline/dataset.hpp"
#include "wbnet/pipeline/normalize.hpp"

namespace wbnet::pipeline {

/// A network together with everything inference needs: the training statistics and the
/// bookkeeping that keeps evaluation off the training split.
struct Model {
  nn::WideBNet<float> net;
  NormalizationStats stats;
  Family train_family = Family::squares;
  std::vector<std::uint64_t> train_seeds;
  double smoothing = 0.75;

  explicit Model(const nn::NetworkConfig& cfg) : net(cfg) {}

  const nn::NetworkConfig& config() const { return net.config(); }

  /// Refuses datasets of the training family that reuse training media.
  void check_eval_set(const Dataset& d) const {
    if (d.spec.family == train_family) require_disjoint(train_seeds, d.seeds);
  }
};

/// Standardised slices in network order (coarsest input level first). Cube slice k holds
/// the frequency of level mid + k.
inline std::vector<ComplexGrid> network_slices(const nn::NetworkConfig& cfg, const NormalizationStats& stats,
                                               const FarFieldCube& cube) {
  const std::size_t expected = std::size_t(cfg.levels - cfg.mid() + 1);
  if (cube.frequencies() != expected || stats.frequencies() != expected)
    throw DataError("network with L=" + std::to_string(cfg.levels) + " needs " + std::to_string(expected) +
                    " frequencies; cube has " + std::to_string(cube.frequencies()) + ", stats " +
                    std::to_string(stats.frequencies()));
  std::vector<ComplexGrid> out;
  for (int l : cfg.input_levels()) {
    const std::size_t f = std::size_t(l - cfg.mid());
    if (cube.slices[f].rows() != cfg.n() || cube.slices[f].cols() != cfg.n())
      throw DataError("slice is " + std::to_string(cube.slices[f].rows()) + "x" + std::to_string(cube.slices[f].cols()) +
                      ", network expects n=" + std::to_string(cfg.n()));
    out.push_back(stats.standardize(cube.slices[f], f));
  }
  return out;
}

inline RealGrid image_of(const Tensor<float>& batch, std::size_t b) {
  const std::size_t n = batch.dim(1);
  RealGrid img(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) img(Eigen::Index(i), Eigen::Index(j)) = batch(b, i, j, 0);
  return img;
}

/// Inference on raw (unstandardised) cubes, in batches.
inline std::vector<RealGrid> predict(const Model& model, const std::vector<FarFieldCube>& cubes,
                                     std::size_t batch = 32) {
  std::vector<RealGrid> out;
  for (std::size_t lo = 0; lo < cubes.size(); lo += batch) {
    std::vector<std::vector<ComplexGrid>> samples;
    for (std::size_t k = lo; k < std::min(cubes.size(), lo + batch); ++k)
      samples.push_back(network_slices(model.config(), model.stats, cubes[k]));
    const Tensor<float> y = model.net.forward(nn::encode_batch<float>(model.config(), samples));
    for (std::size_t b = 0; b < samples.size(); ++b) out.push_back(image_of(y, b));
  }
  return out;
}

inline RealGrid predict(const Model& model, const FarFieldCube& cube) { return predict(model, std::vector{cube}).front(); }

}  // namespace wbnet::pipeline
