#pragma once

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "wbnet/core/tensor.hpp"

namespace wbnet {

/// In-place 2-D DFT by row then column passes. Inverse includes the 1/(rows*cols) factor.
inline void fft2(ComplexGrid& a, bool inverse = false) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in, out;
  const auto pass = [&](auto&& get, auto&& set, Eigen::Index count, Eigen::Index len) {
    in.resize(len);
    for (Eigen::Index r = 0; r < count; ++r) {
      for (Eigen::Index k = 0; k < len; ++k) in[k] = get(r, k);
      if (inverse)
        fft.inv(out, in);
      else
        fft.fwd(out, in);
      for (Eigen::Index k = 0; k < len; ++k) set(r, k, out[k]);
    }
  };
  pass([&](auto r, auto k) { return a(r, k); }, [&](auto r, auto k, auto v) { a(r, k) = v; }, a.rows(), a.cols());
  pass([&](auto c, auto k) { return a(k, c); }, [&](auto c, auto k, auto v) { a(k, c) = v; }, a.cols(), a.rows());
}

}  // namespace wbnet
