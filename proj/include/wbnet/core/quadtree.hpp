#pragma once

#include <complex>
#include <cstddef>
#include <type_traits>

#include "wbnet/core/grid.hpp"
#include "wbnet/core/tensor.hpp"

namespace wbnet {

/// A level-l cell tensor [2^l, 2^l, c] together with the tree it came from.
template <class T>
struct QuadTreeTensor {
  QuadTree tree;
  int level = 0;
  Tensor<T> data;  // [2^level, 2^level, channels]

  std::size_t channels() const { return data.dim(2); }

  /// Pixels of the original n x n matrix covered by cell (i, j).
  PixelBlock cell_block(int i, int j) const {
    const int b = tree.cell_size(level);
    return {i * b, (i + 1) * b, j * b, (j + 1) * b};
  }
};

/// Reshapes an n x n matrix into level-l cells. Channel index enumerates the cell's
/// pixels row-major within the cell.
template <class T>
QuadTreeTensor<T> tensorize(const Grid2<T>& m, const QuadTree& tree, int level) {
  const int n = tree.n();
  require_shape(m.rows() == n && m.cols() == n,
                "tensorize: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                    ", tree expects " + std::to_string(n));
  require_shape(level >= tree.mid_level() && level <= tree.levels, "tensorize: level out of range");
  const int cells = tree.cells(level);
  const int b = tree.cell_size(level);
  QuadTreeTensor<T> out{tree, level, Tensor<T>({std::size_t(cells), std::size_t(cells), std::size_t(b * b)})};
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j)
      for (int p = 0; p < b; ++p)
        for (int q = 0; q < b; ++q) out.data(i, j, p * b + q) = m(i * b + p, j * b + q);
  return out;
}

template <class T>
Grid2<T> detensorize(const QuadTreeTensor<T>& t) {
  const int cells = t.tree.cells(t.level);
  const int b = t.tree.cell_size(t.level);
  require_shape(t.data.rank() == 3 && t.data.dim(0) == std::size_t(cells) && t.data.dim(1) == std::size_t(cells) &&
                    t.data.dim(2) == std::size_t(b * b),
                "detensorize: tensor " + shape_string(t.data.shape()) + " inconsistent with tree");
  Grid2<T> m(t.tree.n(), t.tree.n());
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j)
      for (int p = 0; p < b; ++p)
        for (int q = 0; q < b; ++q) m(i * b + p, j * b + q) = t.data(i, j, p * b + q);
  return m;
}

/// Complex channels become interleaved (re, im) real channels.
template <class R>
Tensor<R> split_complex(const Tensor<std::complex<double>>& t) {
  std::vector<std::size_t> shape = t.shape();
  shape.back() *= 2;
  Tensor<R> out(shape);
  for (std::size_t k = 0; k < t.size(); ++k) {
    out[2 * k] = static_cast<R>(t[k].real());
    out[2 * k + 1] = static_cast<R>(t[k].imag());
  }
  return out;
}

namespace detail {
// Views a rank-3 tensor as a batch of one.
template <class T>
std::array<std::size_t, 4> as_batch(const Tensor<T>& t) {
  require_shape(t.rank() == 3 || t.rank() == 4, "expected [h,w,c] or [b,h,w,c] tensor");
  if (t.rank() == 3) return {1, t.dim(0), t.dim(1), t.dim(2)};
  return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
}
}  // namespace detail

/// Merges each 2x2 group of cells into one cell with 4x the channels. Children are
/// concatenated in the order NW (2i,2j), NE (2i,2j+1), SW (2i+1,2j), SE (2i+1,2j+1).
/// Accepts [h,w,c] or batched [b,h,w,c].
template <class T>
Tensor<T> space_to_depth(const Tensor<T>& in) {
  const auto [B, H, W, C] = detail::as_batch(in);
  if (H < 2 || W < 2) throw ShapeError("space_to_depth: level underflow (need at least 2x2 cells)");
  require_shape(H % 2 == 0 && W % 2 == 0, "space_to_depth: odd cell count");
  std::vector<std::size_t> shape{H / 2, W / 2, 4 * C};
  if (in.rank() == 4) shape.insert(shape.begin(), B);
  Tensor<T> out(shape);
  const T* src = in.data();
  T* dst = out.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < H / 2; ++i)
      for (std::size_t j = 0; j < W / 2; ++j)
        for (std::size_t k = 0; k < 4; ++k) {
          const std::size_t si = 2 * i + k / 2, sj = 2 * j + k % 2;
          const T* s = src + ((b * H + si) * W + sj) * C;
          T* d = dst + ((b * (H / 2) + i) * (W / 2) + j) * 4 * C + k * C;
          std::copy(s, s + C, d);
        }
  return out;
}

/// Exact inverse of space_to_depth.
template <class T>
Tensor<T> depth_to_space(const Tensor<T>& in) {
  const auto [B, H, W, C4] = detail::as_batch(in);
  require_shape(C4 % 4 == 0, "depth_to_space: channels not divisible by 4");
  const std::size_t C = C4 / 4;
  std::vector<std::size_t> shape{2 * H, 2 * W, C};
  if (in.rank() == 4) shape.insert(shape.begin(), B);
  Tensor<T> out(shape);
  const T* src = in.data();
  T* dst = out.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        for (std::size_t k = 0; k < 4; ++k) {
          const std::size_t di = 2 * i + k / 2, dj = 2 * j + k % 2;
          const T* s = src + ((b * H + i) * W + j) * C4 + k * C;
          T* d = dst + ((b * 2 * H + di) * 2 * W + dj) * C;
          std::copy(s, s + C, d);
        }
  return out;
}

/// All-to-all cell exchange on a square level with m x m cells. Channels are viewed as
/// m*m packages of size p = C / (m*m), package (c,d) linearised as c*m + d. Output cell
/// (a,b) package (c,d) is input cell (c,d) package (a,b). This is an involution.
template <class T>
Tensor<T> switch_permute(const Tensor<T>& in) {
  const auto [B, H, W, C] = detail::as_batch(in);
  require_shape(H == W, "switch_permute: cells must be square");
  const std::size_t packages = H * W;
  require_shape(C % packages == 0, "switch_permute: " + std::to_string(C) + " channels not divisible into " +
                                       std::to_string(packages) + " packages");
  const std::size_t p = C / packages;
  Tensor<T> out(in.shape());
  const T* src = in.data();
  T* dst = out.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t cell = 0; cell < packages; ++cell)
      for (std::size_t pkg = 0; pkg < packages; ++pkg) {
        const T* s = src + (b * packages + pkg) * C + cell * p;
        T* d = dst + (b * packages + cell) * C + pkg * p;
        std::copy(s, s + p, d);
      }
  return out;
}

}  // namespace wbnet
