#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wbnet/core/tensor.hpp"
#include "wbnet/nn/params.hpp"

namespace wbnet::nn {

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatCM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

/// Per-cell dense map with unshared weights: out(b,i,j) = W_ij in(b,i,j) + b_ij.
/// Weights are stored [h, w, c_out, c_in], biases [h, w, c_out].
template <class T>
struct LocallyConnected {
  std::size_t cells_h = 0, cells_w = 0, c_in = 0, c_out = 0;
  std::size_t w_off = 0, b_off = 0;

  static LocallyConnected make(ParamStore<T>& store, const std::string& name, std::size_t h, std::size_t w,
                               std::size_t c_in, std::size_t c_out) {
    LocallyConnected l{h, w, c_in, c_out};
    l.w_off = store.add(name + "/kernel", {h, w, c_out, c_in}, c_in, c_out);
    l.b_off = store.add(name + "/bias", {h, w, c_out});
    return l;
  }

  std::size_t param_count() const { return cells_h * cells_w * (c_in * c_out + c_out); }

  void check(const Tensor<T>& in) const {
    require_shape(in.rank() == 4 && in.dim(1) == cells_h && in.dim(2) == cells_w && in.dim(3) == c_in,
                  "locally_connected: input " + shape_string(in.shape()) + " expected [B," + std::to_string(cells_h) +
                      "," + std::to_string(cells_w) + "," + std::to_string(c_in) + "]");
  }

  Tensor<T> forward(const T* params, const Tensor<T>& in) const {
    check(in);
    const std::size_t B = in.dim(0), cells = cells_h * cells_w;
    Tensor<T> out({B, cells_h, cells_w, c_out});
    using Stride = Eigen::OuterStride<>;
    for (std::size_t c = 0; c < cells; ++c) {
      Eigen::Map<const MatRM<T>> W(params + w_off + c * c_out * c_in, Eigen::Index(c_out), Eigen::Index(c_in));
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(params + b_off + c * c_out, Eigen::Index(c_out));
      Eigen::Map<const MatCM<T>, 0, Stride> X(in.data() + c * c_in, Eigen::Index(c_in), Eigen::Index(B),
                                              Stride(Eigen::Index(cells * c_in)));
      Eigen::Map<MatCM<T>, 0, Stride> Y(out.data() + c * c_out, Eigen::Index(c_out), Eigen::Index(B),
                                        Stride(Eigen::Index(cells * c_out)));
      Y.noalias() = W * X;
      Y.colwise() += bias;
    }
    return out;
  }

  /// Accumulates parameter gradients into `grads`; returns d(loss)/d(in).
  Tensor<T> backward(const T* params, T* grads, const Tensor<T>& in, const Tensor<T>& dout) const {
    const std::size_t B = in.dim(0), cells = cells_h * cells_w;
    Tensor<T> din(in.shape());
    using Stride = Eigen::OuterStride<>;
    for (std::size_t c = 0; c < cells; ++c) {
      Eigen::Map<const MatRM<T>> W(params + w_off + c * c_out * c_in, Eigen::Index(c_out), Eigen::Index(c_in));
      Eigen::Map<MatRM<T>> dW(grads + w_off + c * c_out * c_in, Eigen::Index(c_out), Eigen::Index(c_in));
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(grads + b_off + c * c_out, Eigen::Index(c_out));
      Eigen::Map<const MatCM<T>, 0, Stride> X(in.data() + c * c_in, Eigen::Index(c_in), Eigen::Index(B),
                                              Stride(Eigen::Index(cells * c_in)));
      Eigen::Map<const MatCM<T>, 0, Stride> dY(dout.data() + c * c_out, Eigen::Index(c_out), Eigen::Index(B),
                                               Stride(Eigen::Index(cells * c_out)));
      Eigen::Map<MatCM<T>, 0, Stride> dX(din.data() + c * c_in, Eigen::Index(c_in), Eigen::Index(B),
                                         Stride(Eigen::Index(cells * c_in)));
      dW.noalias() += dY * X.transpose();
      db += dY.rowwise().sum();
      dX.noalias() = W.transpose() * dY;
    }
    return din;
  }
};

/// Shared-weight k x k convolution with circular (periodic) padding, stride 1.
/// Weights are stored [k, k, c_in, c_out], bias [c_out].
template <class T>
struct Conv2dPeriodic {
  std::size_t k = 5, c_in = 1, c_out = 1;
  std::size_t w_off = 0, b_off = 0;

  static Conv2dPeriodic make(ParamStore<T>& store, const std::string& name, std::size_t k, std::size_t c_in,
                             std::size_t c_out) {
    require_shape(k % 2 == 1, "conv2d_periodic: kernel size must be odd");
    Conv2dPeriodic l{k, c_in, c_out};
    l.w_off = store.add(name + "/kernel", {k, k, c_in, c_out}, k * k * c_in, k * k * c_out);
    l.b_off = store.add(name + "/bias", {c_out});
    return l;
  }

  std::size_t param_count() const { return k * k * c_in * c_out + c_out; }

  // Rows: (b, i, j); columns: (di, dj, c) with source pixel ((i + di - r) mod H, (j + dj - r) mod W).
  MatRM<T> im2col(const Tensor<T>& in) const {
    const std::size_t B = in.dim(0), H = in.dim(1), W = in.dim(2);
    const std::ptrdiff_t r = std::ptrdiff_t(k / 2);
    MatRM<T> col(Eigen::Index(B * H * W), Eigen::Index(k * k * c_in));
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
          T* row = col.data() + ((b * H + i) * W + j) * k * k * c_in;
          for (std::size_t di = 0; di < k; ++di) {
            const std::size_t si = std::size_t((std::ptrdiff_t(i + di) - r + std::ptrdiff_t(H)) % std::ptrdiff_t(H));
            for (std::size_t dj = 0; dj < k; ++dj) {
              const std::size_t sj = std::size_t((std::ptrdiff_t(j + dj) - r + std::ptrdiff_t(W)) % std::ptrdiff_t(W));
              const T* src = in.data() + ((b * H + si) * W + sj) * c_in;
              std::copy(src, src + c_in, row + (di * k + dj) * c_in);
            }
          }
        }
    return col;
  }

  Tensor<T> forward(const T* params, const Tensor<T>& in) const {
    require_shape(in.rank() == 4 && in.dim(3) == c_in, "conv2d_periodic: input " + shape_string(in.shape()) +
                                                           " expected " + std::to_string(c_in) + " channels");
    const std::size_t B = in.dim(0), H = in.dim(1), W = in.dim(2);
    const MatRM<T> col = im2col(in);
    Eigen::Map<const MatRM<T>> Wm(params + w_off, Eigen::Index(k * k * c_in), Eigen::Index(c_out));
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(params + b_off, Eigen::Index(c_out));
    Tensor<T> out({B, H, W, c_out});
    Eigen::Map<MatRM<T>> Y(out.data(), Eigen::Index(B * H * W), Eigen::Index(c_out));
    Y.noalias() = col * Wm;
    Y.rowwise() += bias;
    return out;
  }

  Tensor<T> backward(const T* params, T* grads, const Tensor<T>& in, const Tensor<T>& dout) const {
    const std::size_t B = in.dim(0), H = in.dim(1), W = in.dim(2);
    const std::ptrdiff_t r = std::ptrdiff_t(k / 2);
    const MatRM<T> col = im2col(in);
    Eigen::Map<const MatRM<T>> Wm(params + w_off, Eigen::Index(k * k * c_in), Eigen::Index(c_out));
    Eigen::Map<MatRM<T>> dW(grads + w_off, Eigen::Index(k * k * c_in), Eigen::Index(c_out));
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(grads + b_off, Eigen::Index(c_out));
    Eigen::Map<const MatRM<T>> dY(dout.data(), Eigen::Index(B * H * W), Eigen::Index(c_out));
    dW.noalias() += col.transpose() * dY;
    db += dY.colwise().sum();
    const MatRM<T> dcol = dY * Wm.transpose();
    Tensor<T> din(in.shape());
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
          const T* row = dcol.data() + ((b * H + i) * W + j) * k * k * c_in;
          for (std::size_t di = 0; di < k; ++di) {
            const std::size_t si = std::size_t((std::ptrdiff_t(i + di) - r + std::ptrdiff_t(H)) % std::ptrdiff_t(H));
            for (std::size_t dj = 0; dj < k; ++dj) {
              const std::size_t sj = std::size_t((std::ptrdiff_t(j + dj) - r + std::ptrdiff_t(W)) % std::ptrdiff_t(W));
              T* dst = din.data() + ((b * H + si) * W + sj) * c_in;
              const T* src = row + (di * k + dj) * c_in;
              for (std::size_t c = 0; c < c_in; ++c) dst[c] += src[c];
            }
          }
        }
    return din;
  }
};

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.storage()) v = v > T(0) ? v : T(0);
  return y;
}

/// Gradient through relu given its pre-activation input.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& dout) {
  Tensor<T> d = dout;
  for (std::size_t k = 0; k < d.size(); ++k)
    if (!(pre[k] > T(0))) d[k] = T(0);
  return d;
}

/// out = in + relu(LC(in)), LC mapping C -> C on the same cells.
template <class T>
struct ResidualBlock {
  LocallyConnected<T> body;

  static ResidualBlock make(ParamStore<T>& store, const std::string& name, std::size_t h, std::size_t w,
                            std::size_t channels) {
    return {LocallyConnected<T>::make(store, name, h, w, channels, channels)};
  }

  std::size_t param_count() const { return body.param_count(); }

  struct Cache {
    Tensor<T> pre;
  };

  Tensor<T> forward(const T* params, const Tensor<T>& in, Cache* cache = nullptr) const {
    Tensor<T> pre = body.forward(params, in);
    Tensor<T> out = relu(pre);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += in[k];
    if (cache) cache->pre = std::move(pre);
    return out;
  }

  Tensor<T> backward(const T* params, T* grads, const Tensor<T>& in, const Cache& cache, const Tensor<T>& dout) const {
    Tensor<T> din = body.backward(params, grads, in, relu_backward(cache.pre, dout));
    for (std::size_t k = 0; k < din.size(); ++k) din[k] += dout[k];
    return din;
  }
};

/// Concatenates two [B,h,w,*] tensors along channels.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_shape(a.rank() == 4 && b.rank() == 4 && a.dim(0) == b.dim(0) && a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2),
                "concat_channels: cell grids differ");
  const std::size_t ca = a.dim(3), cb = b.dim(3), cells = a.dim(0) * a.dim(1) * a.dim(2);
  Tensor<T> out({a.dim(0), a.dim(1), a.dim(2), ca + cb});
  for (std::size_t c = 0; c < cells; ++c) {
    std::copy_n(a.data() + c * ca, ca, out.data() + c * (ca + cb));
    std::copy_n(b.data() + c * cb, cb, out.data() + c * (ca + cb) + ca);
  }
  return out;
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::size_t ca) {
  const std::size_t c = x.dim(3), cb = c - ca, cells = x.dim(0) * x.dim(1) * x.dim(2);
  Tensor<T> a({x.dim(0), x.dim(1), x.dim(2), ca}), b({x.dim(0), x.dim(1), x.dim(2), cb});
  for (std::size_t k = 0; k < cells; ++k) {
    std::copy_n(x.data() + k * c, ca, a.data() + k * ca);
    std::copy_n(x.data() + k * c + ca, cb, b.data() + k * cb);
  }
  return {std::move(a), std::move(b)};
}

}  // namespace wbnet::nn
