#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "wbnet/core/errors.hpp"

namespace wbnet {

/// Half-open pixel rectangle [row0,row1) x [col0,col1).
struct PixelBlock {
  int row0, row1, col0, col1;
  bool operator==(const PixelBlock&) const = default;
};

/// Complete quad-tree over an n x n grid: n = 2^levels * leaf.
struct QuadTree {
  int levels = 4;
  int leaf = 5;

  int n() const { return leaf << levels; }
  /// Coarsest level the network touches; ceil(L/2) so odd L still works.
  int mid_level() const { return (levels + 1) / 2; }
  int cells(int level) const { return 1 << level; }
  /// Pixel side length of one cell at `level`.
  int cell_size(int level) const { return leaf << (levels - level); }

  void validate() const {
    if (levels < 2) throw ConfigError("quad-tree needs at least 2 levels");
    if (leaf < 1) throw ConfigError("leaf size must be >= 1");
  }

  bool operator==(const QuadTree&) const = default;
};

struct FrequencyLevel {
  double hertz;
  int level;
};

/// Square imaging domain, its quad-tree discretisation and the frequency band.
///
/// Grid nodes sit at cell centres: x_i = domain_min + (i + 1/2) h with h = (max - min) / n.
/// The frequency assimilated at level l is f_max / 2^(L - l) for l in [mid_level, L].
struct GridSpec {
  double domain_min = -0.5;
  double domain_max = 0.5;
  QuadTree tree{};
  double f_max = 10.0;

  int n() const { return tree.n(); }
  double length() const { return domain_max - domain_min; }
  double h() const { return length() / n(); }
  double node(int i) const { return domain_min + (i + 0.5) * h(); }

  /// f_max giving `ppw` points per wavelength with unit background speed.
  static double f_max_for_ppw(const QuadTree& tree, double length, double ppw) {
    return tree.n() / (ppw * length);
  }

  static GridSpec with_ppw(QuadTree tree, double ppw = 8.0) {
    GridSpec g;
    g.tree = tree;
    g.f_max = f_max_for_ppw(tree, g.length(), ppw);
    return g;
  }

  std::vector<FrequencyLevel> frequencies() const {
    std::vector<FrequencyLevel> out;
    for (int l = tree.mid_level(); l <= tree.levels; ++l)
      out.push_back({f_max / double(1 << (tree.levels - l)), l});
    return out;
  }

  void validate() const {
    tree.validate();
    if (!(domain_max > domain_min)) throw ConfigError("empty imaging domain");
    if (!(f_max > 0)) throw ConfigError("f_max must be positive");
  }
};

inline double angular(double hertz) { return 2.0 * std::numbers::pi * hertz; }

}  // namespace wbnet
