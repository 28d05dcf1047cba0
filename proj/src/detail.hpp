#pragma once

#include "mmflow/disttrans.hpp"

#include <array>

namespace mmflow::detail {

/// Visits every cell carrying a forward-difference term: all grid cells in
/// index order, then the one-cell exterior layer (exactly one coordinate -1).
template <typename F>
void for_each_term(const Grid& g, F&& f) {
  for (Index i = 0; i < g.cells(); ++i) f(g.coords(i));
  const int d = g.dim();
  for (int axis = 0; axis < d; ++axis) {
    Coords c{0, 0, 0};
    c[std::size_t(axis)] = -1;
    const int a = axis == 0 ? 1 : 0;
    const int b = axis == 2 ? 1 : 2;
    for (int i = 0; i < g.extent(a); ++i)
      for (int j = 0; j < g.extent(b); ++j) {
        c[std::size_t(a)] = i;
        c[std::size_t(b)] = j;
        f(c);
      }
  }
}

inline int label_at(const LabelField& f, const Coords& x) {
  return f.grid.contains(x) ? f.labels[f.grid.index(x)] : f.exterior();
}

/// local[0] = label at x, local[k+1] = label at x + e_k.
inline void local_labels(const LabelField& f, const Coords& x, std::array<int, 4>& local) {
  local[0] = label_at(f, x);
  for (int k = 0; k < f.grid.dim(); ++k) {
    Coords y = x;
    ++y[std::size_t(k)];
    local[std::size_t(k + 1)] = label_at(f, y);
  }
}

/// For each cell, the source cell its signed_dist value propagates from:
/// the nearest mask cell outside the mask, the nearest complement cell
/// inside, -1 when reached from outside the grid.
std::vector<Index> nearest_sources(const Mask& mask, const Norm& mobility, const Grid& grid, Exterior exterior);

}  // namespace mmflow::detail
