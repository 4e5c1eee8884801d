#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wbnet/core/errors.hpp"
#include "wbnet/physics/far_field.hpp"

namespace wbnet::pipeline {

/// Per-frequency scalar mean and std, pooling real and imaginary parts of every entry of
/// every training slice into one population of 2 * n_src * n_rcv * samples numbers.
struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t frequencies() const { return mean.size(); }

  static NormalizationStats fit(const std::vector<FarFieldCube>& train) {
    if (train.empty()) throw DataError("normalisation needs at least one training sample");
    const std::size_t nf = train.front().frequencies();
    NormalizationStats s;
    s.mean.assign(nf, 0.0);
    s.std.assign(nf, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
      double sum = 0, count = 0;
      for (const auto& c : train) {
        if (c.frequencies() != nf) throw DataError("training cubes disagree on frequency count");
        sum += c.slices[f].real().sum() + c.slices[f].imag().sum();
        count += 2.0 * double(c.slices[f].size());
      }
      const double mu = sum / count;
      double ss = 0;
      for (const auto& c : train)
        ss += (c.slices[f].real().array() - mu).square().sum() + (c.slices[f].imag().array() - mu).square().sum();
      s.mean[f] = mu;
      s.std[f] = std::sqrt(ss / count);
      if (!(s.std[f] > 0)) throw DataError("training data at frequency " + std::to_string(f) + " has zero spread");
    }
    return s;
  }

  ComplexGrid standardize(const ComplexGrid& slice, std::size_t f) const {
    if (f >= mean.size()) throw DataError("no normalisation stats for frequency " + std::to_string(f));
    return (slice.array() - cd(mean[f], mean[f])) / std[f];
  }

  bool operator==(const NormalizationStats&) const = default;
};

/// Independent stream for (seed, a, b), e.g. (run seed, epoch, sample).
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(a), std::uint32_t(a >> 32),
                    std::uint32_t(b), std::uint32_t(b >> 32)};
  return std::mt19937_64(seq);
}

/// Multiplicative noise Lambda (1 + eps), eps ~ N(0, sigma^2) real and iid per entry.
inline ComplexGrid inject_noise(const ComplexGrid& clean, double sigma, std::mt19937_64& rng) {
  if (sigma < 0) throw ConfigError("noise sigma must be non-negative");
  if (sigma == 0) return clean;
  std::normal_distribution<double> nd(0.0, sigma);
  ComplexGrid out(clean.rows(), clean.cols());
  for (Eigen::Index k = 0; k < clean.size(); ++k) out.data()[k] = clean.data()[k] * (1.0 + nd(rng));
  return out;
}

inline FarFieldCube inject_noise(const FarFieldCube& clean, double sigma, std::mt19937_64& rng) {
  FarFieldCube out = clean;
  for (auto& s : out.slices) s = inject_noise(s, sigma, rng);
  return out;
}

}  // namespace wbnet::pipeline
