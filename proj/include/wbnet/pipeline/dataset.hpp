#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "wbnet/core/parallel.hpp"
#include "wbnet/physics/far_field.hpp"
#include "wbnet/physics/scatterers.hpp"

namespace wbnet::pipeline {

/// Media and their scattering data. Sample k was drawn with seeds[k].
struct Dataset {
  GridSpec grid;
  ScattererSpec spec;
  StencilOrder order = StencilOrder::second;
  std::vector<double> hertz;
  std::vector<std::uint64_t> seeds;
  std::vector<RealGrid> eta;
  std::vector<FarFieldCube> data;

  std::size_t size() const { return eta.size(); }

  void check() const {
    if (eta.size() != data.size() || eta.size() != seeds.size())
      throw DataError("dataset has " + std::to_string(eta.size()) + " media, " + std::to_string(data.size()) +
                      " cubes and " + std::to_string(seeds.size()) + " seeds");
    for (std::size_t k = 0; k < size(); ++k) {
      if (eta[k].rows() != grid.n() || eta[k].cols() != grid.n()) throw DataError("medium size mismatch");
      if (data[k].hertz != hertz) throw DataError("cube frequencies differ from the manifest");
    }
  }
};

/// Seeds first, first + 1, ... so splits built from disjoint ranges never share a medium.
inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> s(count);
  for (std::size_t k = 0; k < count; ++k) s[k] = first + k;
  return s;
}

inline std::vector<double> band(const GridSpec& grid) {
  std::vector<double> hz;
  for (const auto& f : grid.frequencies()) hz.push_back(f.hertz);
  return hz;
}

inline Dataset generate_dataset(const GridSpec& grid, const ScattererSpec& spec, StencilOrder order,
                                const std::vector<std::uint64_t>& seeds) {
  grid.validate();
  Dataset d{grid, spec, order, band(grid), seeds, std::vector<RealGrid>(seeds.size()),
            std::vector<FarFieldCube>(seeds.size())};
  const auto geo = AcquisitionGeometry::for_grid(grid);
  parallel_for(seeds.size(), [&](std::size_t k) {
    d.eta[k] = generate(grid, spec, seeds[k]);
    d.data[k] = forward_map(grid, d.eta[k], geo, d.hertz, order);
  });
  return d;
}

/// Training data use the order-2 stencil and test data the order-4 stencil, on disjoint seeds.
struct Split {
  Dataset train, test;
};

inline Split generate_split(const GridSpec& grid, const ScattererSpec& spec, std::uint64_t seed, std::size_t n_train,
                            std::size_t n_test) {
  const std::uint64_t base = seed * 1000003ull;
  return {generate_dataset(grid, spec, StencilOrder::second, seed_range(base, n_train)),
          generate_dataset(grid, spec, StencilOrder::fourth, seed_range(base + n_train, n_test))};
}

inline void require_disjoint(const std::vector<std::uint64_t>& train, const std::vector<std::uint64_t>& test) {
  std::vector<std::uint64_t> a = train, b = test;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::uint64_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  if (!both.empty())
    throw DataError("evaluation set shares " + std::to_string(both.size()) + " seeds with the training split (first " +
                    std::to_string(both.front()) + ")");
}

}  // namespace wbnet::pipeline
