#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wbnet/core/errors.hpp"
#include "wbnet/core/tensor.hpp"

namespace wbnet::nn {

struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  // Glorot fans; zero fan means "initialise to zero" (biases).
  std::size_t fan_in = 0, fan_out = 0;
};

/// Flat parameter storage with a name -> shape registry. Gradients use the same layout.
template <class T>
class ParamStore {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape, std::size_t fan_in = 0, std::size_t fan_out = 0) {
    for (const auto& e : entries_)
      if (e.name == name) throw ShapeError("duplicate parameter name " + name);
    ParamEntry e{std::move(name), std::move(shape), values_.size(), 0, fan_in, fan_out};
    e.size = Tensor<T>::count(e.shape);
    values_.resize(values_.size() + e.size, T(0));
    entries_.push_back(e);
    return e.offset;
  }

  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  const ParamEntry& find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return e;
    throw ShapeError("no parameter named " + name);
  }

  /// Glorot-uniform weights, bound sqrt(6 / (fan_in + fan_out)); zero biases.
  void glorot_init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (const auto& e : entries_) {
      if (e.fan_in + e.fan_out == 0) {
        std::fill_n(values_.begin() + std::ptrdiff_t(e.offset), e.size, T(0));
        continue;
      }
      const double bound = std::sqrt(6.0 / double(e.fan_in + e.fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::size_t k = 0; k < e.size; ++k) values_[e.offset + k] = T(dist(rng));
    }
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.shape, e.fan_in, e.fan_out);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values()[k] = U(values_[k]);
    return out;
  }

 private:
  std::vector<ParamEntry> entries_;
  std::vector<T> values_;
};

}  // namespace wbnet::nn
