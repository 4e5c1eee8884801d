#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wbnet/core/errors.hpp"

namespace wbnet {

/// Row-major n x n field (slowness perturbation, far-field slice, image).
template <class T>
using Grid2 = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RealGrid = Grid2<double>;
using ComplexGrid = Grid2<std::complex<double>>;

/// Dense row-major tensor of rank 1..4. Only the shapes the pipeline needs.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T{}) : shape_(std::move(shape)) {
    require_shape(!shape_.empty() && shape_.size() <= 4, "tensor rank must be in [1,4]");
    data_.assign(count(shape_), fill);
  }

  Tensor(std::initializer_list<std::size_t> shape, T fill = T{})
      : Tensor(std::vector<std::size_t>(shape), fill) {}

  static std::size_t count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  T& operator()(std::size_t b, std::size_t i, std::size_t j, std::size_t k) {
    return data_[((b * shape_[1] + i) * shape_[2] + j) * shape_[3] + k];
  }
  const T& operator()(std::size_t b, std::size_t i, std::size_t j, std::size_t k) const {
    return data_[((b * shape_[1] + i) * shape_[2] + j) * shape_[3] + k];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  void reshape(std::vector<std::size_t> shape) {
    require_shape(count(shape) == data_.size(), "reshape must preserve element count");
    shape_ = std::move(shape);
  }

  bool operator==(const Tensor& o) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace wbnet
