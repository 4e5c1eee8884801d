#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wbnet/core/grid.hpp"
#include "wbnet/core/quadtree.hpp"
#include "wbnet/nn/layers.hpp"
#include "wbnet/nn/params.hpp"

namespace wbnet::nn {

enum class Variant { wide, narrow, switchless };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::wide: return "wide";
    case Variant::narrow: return "narrow";
    case Variant::switchless: return "switchless";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "wide") return Variant::wide;
  if (s == "narrow") return Variant::narrow;
  if (s == "switchless") return Variant::switchless;
  throw ConfigError("unknown network variant '" + s + "'");
}

struct NetworkConfig {
  int levels = 4;
  int leaf = 5;
  int rank = 4;
  int n_cnn = 3;
  int n_rnn = 3;
  int conv_kernel = 5;
  int conv_width = 8;
  Variant variant = Variant::wide;

  QuadTree tree() const { return {levels, leaf}; }
  int n() const { return leaf << levels; }
  int mid() const { return (levels + 1) / 2; }
  /// Channels per cell at level l of the downsweep: c_L = r, c_{l-1} = 4 c_l.
  std::size_t channels(int level) const { return std::size_t(rank) << (2 * (levels - level)); }
  /// Complex entries per level-l cell of an n x n slice, doubled for (re, im).
  std::size_t input_channels(int level) const {
    const std::size_t b = std::size_t(leaf) << (levels - level);
    return 2 * b * b;
  }
  bool multi_frequency() const { return variant != Variant::narrow; }
  bool uses_switch() const { return variant != Variant::switchless; }
  /// Levels whose data the network consumes, coarsest first.
  std::vector<int> input_levels() const {
    std::vector<int> out;
    for (int l = multi_frequency() ? mid() : levels; l <= levels; ++l) out.push_back(l);
    return out;
  }

  void validate() const {
    tree().validate();
    if (rank < 1) throw ConfigError("interaction rank must be >= 1");
    if (n_cnn < 1) throw ConfigError("conv block needs at least one layer");
    if (n_rnn < 0) throw ConfigError("negative residual block count");
    if (conv_kernel < 1 || conv_kernel % 2 == 0) throw ConfigError("conv kernel must be odd");
    if (conv_width < 1) throw ConfigError("conv width must be >= 1");
    const std::size_t packages = std::size_t(1) << (2 * mid());
    if (uses_switch() && channels(mid()) % packages != 0)
      throw ConfigError("switch needs c_mid=" + std::to_string(channels(mid())) + " divisible by " +
                        std::to_string(packages) + " packages; increase rank");
  }

  bool operator==(const NetworkConfig&) const = default;
};

/// Closed-form parameter count, independent of the layer registry.
inline std::size_t param_count(const NetworkConfig& c) {
  c.validate();
  const int L = c.levels, m = c.mid();
  const std::size_t r = std::size_t(c.rank), s2 = std::size_t(c.leaf) * std::size_t(c.leaf);
  const auto cells = [](int l) { return std::size_t(1) << (2 * l); };
  std::size_t total = 0;
  for (int l : c.input_levels()) total += cells(l) * (c.input_channels(l) * r + r);
  for (int l = L; l > m; --l) {
    const std::size_t out = 4 * c.channels(l);
    const std::size_t in = out + (c.multi_frequency() ? r : 0);
    total += cells(l - 1) * (in * out + out);
  }
  const std::size_t C = c.channels(m);
  total += std::size_t(c.n_rnn) * cells(m) * (C * C + C);
  for (int l = m; l < L; ++l) total += cells(l) * (c.channels(l) * c.channels(l) + c.channels(l));
  total += cells(L) * (r * s2 + s2);
  const std::size_t k2 = std::size_t(c.conv_kernel) * std::size_t(c.conv_kernel), w = std::size_t(c.conv_width);
  if (c.n_cnn == 1) return total + k2 + 1;
  total += k2 * w + w;
  total += std::size_t(c.n_cnn - 2) * (k2 * w * w + w);
  total += k2 * w + 1;
  return total;
}

namespace detail {

/// [B, 2^L, 2^L, s^2] cells -> [B, n, n, 1] image (row-major pixels within a cell).
template <class T>
Tensor<T> cells_to_image(const Tensor<T>& x, int leaf) {
  const std::size_t B = x.dim(0), C = x.dim(1), s = std::size_t(leaf), n = C * s;
  Tensor<T> out({B, n, n, 1});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < C; ++i)
      for (std::size_t j = 0; j < C; ++j)
        for (std::size_t p = 0; p < s; ++p)
          for (std::size_t q = 0; q < s; ++q) out(b, i * s + p, j * s + q, 0) = x(b, i, j, p * s + q);
  return out;
}

template <class T>
Tensor<T> image_to_cells(const Tensor<T>& img, int leaf) {
  const std::size_t B = img.dim(0), n = img.dim(1), s = std::size_t(leaf), C = n / s;
  Tensor<T> out({B, C, C, s * s});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < C; ++i)
      for (std::size_t j = 0; j < C; ++j)
        for (std::size_t p = 0; p < s; ++p)
          for (std::size_t q = 0; q < s; ++q) out(b, i, j, p * s + q) = img(b, i * s + p, j * s + q, 0);
  return out;
}

}  // namespace detail

/// Per-level network input: one [B, 2^l, 2^l, 2 (n/2^l)^2] tensor per entry of input_levels().
template <class T>
using NetworkInput = std::vector<Tensor<T>>;

/// Encodes standardised complex slices (one per input level, coarsest first) for a batch.
template <class T>
NetworkInput<T> encode_batch(const NetworkConfig& cfg, const std::vector<std::vector<ComplexGrid>>& samples) {
  const auto levels = cfg.input_levels();
  const QuadTree tree = cfg.tree();
  NetworkInput<T> out;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const int l = levels[k];
    const std::size_t cells = std::size_t(1) << l, ch = cfg.input_channels(l);
    Tensor<T> t({samples.size(), cells, cells, ch});
    for (std::size_t b = 0; b < samples.size(); ++b) {
      require_shape(samples[b].size() == levels.size(), "encode_batch: sample has " +
                                                            std::to_string(samples[b].size()) + " slices, expected " +
                                                            std::to_string(levels.size()));
      const Tensor<T> one = split_complex<T>(tensorize(samples[b][k], tree, l).data);
      std::copy(one.storage().begin(), one.storage().end(), t.data() + b * one.size());
    }
    out.push_back(std::move(t));
  }
  return out;
}

/// Wide-band butterfly network and its narrow / switchless variants.
template <class T>
class WideBNet {
 public:
  struct Cache {
    NetworkInput<T> inputs;
    std::vector<Tensor<T>> h_in;  // concatenated inputs of H^l, l = L..m+1
    std::vector<Tensor<T>> rnn_in;
    std::vector<typename ResidualBlock<T>::Cache> rnn_cache;
    std::vector<Tensor<T>> g_in;  // l = m..L-1
    Tensor<T> u_in;
    std::vector<Tensor<T>> conv_in;  // input of each conv layer (post-activation)
    std::vector<Tensor<T>> conv_pre;
  };

  explicit WideBNet(const NetworkConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const int L = cfg.levels, m = cfg.mid();
    const std::size_t r = std::size_t(cfg.rank);
    const auto cells = [](int l) { return std::size_t(1) << l; };
    for (int l : cfg.input_levels())
      v_.push_back(LocallyConnected<T>::make(store_, "V" + std::to_string(l), cells(l), cells(l),
                                             cfg.input_channels(l), r));
    for (int l = L; l > m; --l) {
      const std::size_t out = 4 * cfg.channels(l);
      h_.push_back(LocallyConnected<T>::make(store_, "H" + std::to_string(l), cells(l - 1), cells(l - 1),
                                             out + (cfg.multi_frequency() ? r : 0), out));
    }
    for (int k = 0; k < cfg.n_rnn; ++k)
      rnn_.push_back(ResidualBlock<T>::make(store_, "R" + std::to_string(k), cells(m), cells(m), cfg.channels(m)));
    for (int l = m; l < L; ++l)
      g_.push_back(LocallyConnected<T>::make(store_, "G" + std::to_string(l), cells(l), cells(l), cfg.channels(l),
                                             cfg.channels(l)));
    u_ = LocallyConnected<T>::make(store_, "U" + std::to_string(L), cells(L), cells(L), r,
                                   std::size_t(cfg.leaf) * std::size_t(cfg.leaf));
    for (int k = 0; k < cfg.n_cnn; ++k) {
      const std::size_t cin = k == 0 ? 1 : std::size_t(cfg.conv_width);
      const std::size_t cout = k == cfg.n_cnn - 1 ? 1 : std::size_t(cfg.conv_width);
      conv_.push_back(Conv2dPeriodic<T>::make(store_, "conv" + std::to_string(k), std::size_t(cfg.conv_kernel),
                                              cin, cout));
    }
  }

  const NetworkConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }

  /// Image batch [B, n, n, 1].
  Tensor<T> forward(const NetworkInput<T>& in, Cache* cache = nullptr) const { return forward(store_.data(), in, cache); }

  Tensor<T> forward(const T* p, const NetworkInput<T>& in, Cache* cache = nullptr) const {
    check_input(in);
    const int L = cfg_.levels, m = cfg_.mid();
    const std::size_t nv = v_.size();
    Tensor<T> x = v_[nv - 1].forward(p, in[nv - 1]);
    for (int l = L, k = 0; l > m; --l, ++k) {
      Tensor<T> z = space_to_depth(x);
      if (cfg_.multi_frequency()) z = concat_channels(z, v_[nv - 2 - std::size_t(k)].forward(p, in[nv - 2 - std::size_t(k)]));
      x = h_[std::size_t(k)].forward(p, z);
      if (cache) cache->h_in.push_back(std::move(z));
    }
    if (cfg_.uses_switch()) x = switch_permute(x);
    for (const auto& block : rnn_) {
      typename ResidualBlock<T>::Cache bc;
      Tensor<T> y = block.forward(p, x, cache ? &bc : nullptr);
      if (cache) {
        cache->rnn_in.push_back(std::move(x));
        cache->rnn_cache.push_back(std::move(bc));
      }
      x = std::move(y);
    }
    for (const auto& g : g_) {
      Tensor<T> y = depth_to_space(g.forward(p, x));
      if (cache) cache->g_in.push_back(std::move(x));
      x = std::move(y);
    }
    Tensor<T> img = detail::cells_to_image(u_.forward(p, x), cfg_.leaf);
    if (cache) cache->u_in = std::move(x);
    for (std::size_t k = 0; k < conv_.size(); ++k) {
      Tensor<T> pre = conv_[k].forward(p, img);
      Tensor<T> next = k + 1 < conv_.size() ? relu(pre) : pre;
      if (cache) {
        cache->conv_in.push_back(std::move(img));
        cache->conv_pre.push_back(std::move(pre));
      }
      img = std::move(next);
    }
    if (cache) cache->inputs = in;
    return img;
  }

  /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
  void backward(const T* p, T* grads, const Cache& cache, const Tensor<T>& dout) const {
    const int L = cfg_.levels, m = cfg_.mid();
    Tensor<T> d = dout;
    for (std::size_t k = conv_.size(); k-- > 0;) {
      if (k + 1 < conv_.size()) d = relu_backward(cache.conv_pre[k], d);
      d = conv_[k].backward(p, grads, cache.conv_in[k], d);
    }
    d = u_.backward(p, grads, cache.u_in, detail::image_to_cells(d, cfg_.leaf));
    for (std::size_t k = g_.size(); k-- > 0;) d = g_[k].backward(p, grads, cache.g_in[k], space_to_depth(d));
    for (std::size_t k = rnn_.size(); k-- > 0;) d = rnn_[k].backward(p, grads, cache.rnn_in[k], cache.rnn_cache[k], d);
    if (cfg_.uses_switch()) d = switch_permute(d);
    const std::size_t nv = v_.size();
    for (int l = m + 1, k = int(h_.size()) - 1; l <= L; ++l, --k) {
      d = h_[std::size_t(k)].backward(p, grads, cache.h_in[std::size_t(k)], d);
      if (cfg_.multi_frequency()) {
        auto [dz, dv] = split_channels(d, d.dim(3) - std::size_t(cfg_.rank));
        const std::size_t vi = nv - 2 - std::size_t(k);
        v_[vi].backward(p, grads, cache.inputs[vi], dv);
        d = std::move(dz);
      }
      d = depth_to_space(d);
    }
    v_[nv - 1].backward(p, grads, cache.inputs[nv - 1], d);
  }

 private:
  void check_input(const NetworkInput<T>& in) const {
    require_shape(in.size() == v_.size(), "widebnet: got " + std::to_string(in.size()) + " input levels, expected " +
                                              std::to_string(v_.size()));
    for (std::size_t k = 0; k < in.size(); ++k) {
      v_[k].check(in[k]);
      require_shape(in[k].dim(0) == in[0].dim(0), "widebnet: batch sizes differ across levels");
    }
  }

  NetworkConfig cfg_;
  ParamStore<T> store_;
  std::vector<LocallyConnected<T>> v_;  // coarsest input level first
  std::vector<LocallyConnected<T>> h_;  // l = L..m+1
  std::vector<ResidualBlock<T>> rnn_;
  std::vector<LocallyConnected<T>> g_;  // l = m..L-1
  LocallyConnected<T> u_;
  std::vector<Conv2dPeriodic<T>> conv_;
};

}  // namespace wbnet::nn
