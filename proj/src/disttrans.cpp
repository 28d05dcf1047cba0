#include "mmflow/disttrans.hpp"

#include "detail.hpp"

#include <queue>

namespace mmflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Stencil {
  std::vector<Coords> offsets;
  std::vector<Index> shifts;
  std::vector<double> costs;
  double s0 = 0;
};

Stencil make_stencil(const Norm& psi, const Grid& g) {
  Stencil s;
  s.offsets = wide_stencil(g.dim());
  double cheapest = kInf;
  for (const auto& o : s.offsets) {
    Vec v(g.dim());
    for (int k = 0; k < g.dim(); ++k) v[k] = o[std::size_t(k)] * g.h();
    s.costs.push_back(psi(v));
    s.shifts.push_back(o[0] * g.stride(0) + o[1] * g.stride(1) + o[2] * g.stride(2));
    cheapest = std::min(cheapest, s.costs.back());
  }
  s.s0 = 0.5 * cheapest;
  return s;
}

// Least fixed point of d(x) = min(seed(x), min_y d(y) + w(y, x)).
// `roots`, when given, receives the seed cell each value was reached from.
Eigen::VectorXd propagate(const Grid& g, const Stencil& st, Eigen::VectorXd d, std::vector<Index>* roots = nullptr) {
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (Index i = 0; i < g.cells(); ++i)
    if (d[i] < kInf) heap.emplace(d[i], i);
  while (!heap.empty()) {
    const auto [v, i] = heap.top();
    heap.pop();
    if (v > d[i]) continue;
    const Coords c = g.coords(i);
    for (std::size_t j = 0; j < st.offsets.size(); ++j) {
      const Coords& o = st.offsets[j];
      const Coords y{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (!g.contains(y)) continue;
      const Index yi = i + st.shifts[j];
      const double nv = v + st.costs[j];
      if (nv < d[yi]) {
        d[yi] = nv;
        if (roots) (*roots)[std::size_t(yi)] = (*roots)[std::size_t(i)];
        heap.emplace(nv, yi);
      }
    }
  }
  return d;
}

// Distance from the source set (mask cells, plus everything outside the grid
// when `exterior_source`) minus s0.
Eigen::VectorXd distance_from(const Mask& sources, bool exterior_source, const Grid& g, const Stencil& st,
                              std::vector<Index>* roots = nullptr) {
  Eigen::VectorXd seed = Eigen::VectorXd::Constant(g.cells(), kInf);
  if (roots) roots->assign(std::size_t(g.cells()), -1);
  for (Index i = 0; i < g.cells(); ++i)
    if (sources[i]) {
      seed[i] = -st.s0;
      if (roots) (*roots)[std::size_t(i)] = i;
    }
  if (exterior_source) {
    for (Index i = 0; i < g.cells(); ++i) {
      if (sources[i]) continue;
      const Coords c = g.coords(i);
      for (std::size_t j = 0; j < st.offsets.size(); ++j) {
        const Coords& o = st.offsets[j];
        if (!g.contains({c[0] - o[0], c[1] - o[1], c[2] - o[2]})) seed[i] = std::min(seed[i], -st.s0 + st.costs[j]);
      }
    }
  }
  return propagate(g, st, std::move(seed), roots);
}

}  // namespace

SignedDistanceField signed_dist(const Mask& mask, const Norm& mobility, const Grid& grid, Exterior exterior) {
  if (mask.size() != grid.cells()) throw std::invalid_argument("signed_dist: mask size does not match grid");
  if (mobility.dim() != grid.dim()) throw std::invalid_argument("signed_dist: mobility dimension does not match grid");
  SignedDistanceField out;
  out.grid = grid;
  const bool ext_in = exterior == Exterior::Inside;
  const Index inside = mask.count();
  if ((inside == 0 && !ext_in) || (inside == grid.cells() && ext_in)) {
    out.empty_boundary = true;
    out.values = Eigen::VectorXd::Constant(grid.cells(), ext_in ? -kInf : kInf);
    return out;
  }
  const Stencil st = make_stencil(mobility, grid);
  const Eigen::VectorXd d_out = distance_from(mask, ext_in, grid, st);
  const Eigen::VectorXd d_in = distance_from(!mask, !ext_in, grid, st);
  out.values = mask.select(-d_in, d_out);
  return out;
}

std::vector<Index> detail::nearest_sources(const Mask& mask, const Norm& mobility, const Grid& grid, Exterior exterior) {
  const Stencil st = make_stencil(mobility, grid);
  const bool ext_in = exterior == Exterior::Inside;
  std::vector<Index> out_roots, in_roots;
  distance_from(mask, ext_in, grid, st, &out_roots);
  distance_from(!mask, !ext_in, grid, st, &in_roots);
  for (Index i = 0; i < grid.cells(); ++i)
    if (mask[i]) out_roots[std::size_t(i)] = in_roots[std::size_t(i)];
  return out_roots;
}

SignedDistanceField phase_signed_dist(const LabelField& f, int phase, const Norm& mobility) {
  if (phase < 1 || phase > f.phases()) throw std::invalid_argument("phase_signed_dist: phase out of range");
  return signed_dist(f.mask(phase), mobility, f.grid, phase == f.exterior() ? Exterior::Inside : Exterior::Outside);
}

std::vector<SignedDistanceField> phase_distances(const LabelField& f, const NormFamily& psi) {
  if (psi.size() != f.phases()) throw std::invalid_argument("phase_distances: family length must equal N+1");
  std::vector<SignedDistanceField> out;
  out.reserve(std::size_t(f.phases()));
  for (int p = 1; p <= f.phases(); ++p) out.push_back(phase_signed_dist(f, p, psi[p - 1]));
  return out;
}

double dissipation(const LabelField& prev, const LabelField& candidate, const std::vector<SignedDistanceField>& dist) {
  require_same_grid(prev.grid, candidate.grid, "dissipation");
  if (int(dist.size()) != prev.phases()) throw std::invalid_argument("dissipation: need one distance per phase");
  double total = 0;
  for (Index c = 0; c < prev.cells(); ++c) {
    const int a = candidate.labels[c];
    const int b = prev.labels[c];
    if (a == b) continue;
    // the cell lies in A_a delta B_a and in A_b delta B_b
    total += std::abs(dist[std::size_t(a - 1)][c]) + std::abs(dist[std::size_t(b - 1)][c]);
  }
  return total * prev.grid.cell_volume();
}

double dissipation(const LabelField& prev, const LabelField& candidate, const NormFamily& psi) {
  return dissipation(prev, candidate, phase_distances(prev, psi));
}

}  // namespace mmflow
