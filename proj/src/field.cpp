#include "mmflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detail.hpp"

namespace mmflow {

std::vector<Coords> wide_stencil(int dim) {
  std::vector<Coords> out;
  const int zmax = dim == 3 ? 2 : 0;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      for (int c = -zmax; c <= zmax; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        if (std::gcd(std::gcd(std::abs(a), std::abs(b)), std::abs(c)) != 1) continue;
        out.push_back({a, b, c});
      }
  return out;
}

void LabelField::validate() const {
  if (bounded_phases < 1) throw std::invalid_argument("label field: N must be >= 1");
  if (labels.size() != grid.cells()) throw std::invalid_argument("label field: size does not match grid");
  if (labels.size() > 0 && (labels.minCoeff() < 1 || labels.maxCoeff() > bounded_phases + 1))
    throw std::invalid_argument("label field: label out of range 1..N+1");
}

void SoftPartition::validate(double tol) const {
  if (weights.rows() != grid.cells()) throw std::invalid_argument("soft partition: size does not match grid");
  if (weights.cols() < 2) throw std::invalid_argument("soft partition: needs at least two phases");
  if (weights.minCoeff() < -tol || weights.maxCoeff() > 1 + tol)
    throw std::invalid_argument("soft partition: weights outside [0,1]");
  if (((weights.rowwise().sum().array() - 1).abs() > tol).any())
    throw std::invalid_argument("soft partition: weights do not sum to one");
}

SoftPartition SoftPartition::from_labels(const LabelField& f) {
  SoftPartition s;
  s.grid = f.grid;
  s.weights = Eigen::MatrixXd::Zero(f.cells(), f.phases());
  for (Index i = 0; i < f.cells(); ++i) s.weights(i, f.labels[i] - 1) = 1;
  return s;
}

Forcing Forcing::zero(const Grid& g, int phases) {
  Forcing f;
  f.fields.assign(std::size_t(phases), ScalarField(g, 0.0));
  return f;
}

bool Forcing::is_zero() const {
  return std::all_of(fields.begin(), fields.end(), [](const ScalarField& s) { return (s.values.array() == 0).all(); });
}

void Forcing::validate(const Grid& g, int phases) const {
  if (int(fields.size()) != phases) throw std::invalid_argument("forcing: need one field per phase (N+1)");
  if (!(support_radius >= 0)) throw std::invalid_argument("forcing: support radius must be nonnegative");
  for (const auto& s : fields) {
    require_same_grid(s.grid, g, "forcing");
    if (!s.values.allFinite()) throw std::invalid_argument("forcing: values must be finite");
  }
  const auto& ext = fields.back().values;
  for (Index c = 0; c < g.cells(); ++c) {
    if (g.center(c).norm() <= support_radius) continue;
    for (int i = 0; i + 1 < phases; ++i)
      if (fields[std::size_t(i)].values[c] < ext[c])
        throw std::invalid_argument("forcing: H_i >= H_{N+1} violated outside B_R (phase " + std::to_string(i + 1) + ")");
  }
}

double perimeter_phi(const Eigen::VectorXd& u, const Norm& norm, const Grid& grid, double exterior) {
  if (u.size() != grid.cells()) throw std::invalid_argument("perimeter_phi: indicator size does not match grid");
  if (norm.dim() != grid.dim()) throw std::invalid_argument("perimeter_phi: norm dimension does not match grid");
  const int d = grid.dim();
  Eigen::VectorXd delta(d);
  double total = 0;
  detail::for_each_term(grid, [&](const Coords& x) {
    const double v0 = grid.contains(x) ? u[grid.index(x)] : exterior;
    for (int k = 0; k < d; ++k) {
      Coords y = x;
      ++y[std::size_t(k)];
      delta[k] = (grid.contains(y) ? u[grid.index(y)] : exterior) - v0;
    }
    if (!delta.isZero(0)) total += norm(delta);
  });
  return total * grid.facet_area();
}

Breakdown per_phi(const LabelField& f, const NormFamily& phi) {
  if (phi.size() != f.phases()) throw std::invalid_argument("per_phi: family length must equal N+1");
  const Grid& g = f.grid;
  const int d = g.dim();
  Breakdown b;
  b.per_phase.assign(std::size_t(f.phases()), 0.0);
  std::array<int, 4> local{};
  Eigen::VectorXd delta(d);
  detail::for_each_term(g, [&](const Coords& x) {
    detail::local_labels(f, x, local);
    for (int s = 0; s <= d; ++s) {
      const int p = local[std::size_t(s)];
      bool seen = false;
      for (int t = 0; t < s; ++t) seen = seen || local[std::size_t(t)] == p;
      if (seen) continue;
      const double b0 = local[0] == p ? 1 : 0;
      for (int k = 0; k < d; ++k) delta[k] = (local[std::size_t(k + 1)] == p ? 1 : 0) - b0;
      if (!delta.isZero(0)) b.per_phase[std::size_t(p - 1)] += phi[p - 1](delta);
    }
  });
  for (auto& v : b.per_phase) {
    v *= g.facet_area();
    b.total += v;
  }
  return b;
}

Breakdown sym_diff_volume(const LabelField& a, const LabelField& b) {
  require_same_grid(a.grid, b.grid, "sym_diff_volume");
  const int phases = std::max(a.phases(), b.phases());
  Breakdown out;
  std::vector<Index> counts(std::size_t(phases), 0);
  for (Index i = 0; i < a.cells(); ++i) {
    if (a.labels[i] == b.labels[i]) continue;
    ++counts[std::size_t(a.labels[i] - 1)];
    ++counts[std::size_t(b.labels[i] - 1)];
  }
  for (Index c : counts) {
    out.per_phase.push_back(double(c) * a.grid.cell_volume());
    out.total += out.per_phase.back();
  }
  return out;
}

double force_integral(const LabelField& f, const Forcing& forcing) {
  if (int(forcing.fields.size()) != f.phases()) throw std::invalid_argument("force_integral: need N+1 forcing fields");
  double total = 0;
  for (Index c = 0; c < f.cells(); ++c) {
    if (f.labels[c] == f.exterior()) continue;
    total += forcing.relative(f.labels[c], c);
  }
  return total * f.grid.cell_volume();
}

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

std::vector<Eigen::Vector2d> hull2d(std::vector<Eigen::Vector2d> p) {
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;
  std::vector<Eigen::Vector2d> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  return h;
}

double segment_distance(const Eigen::Vector2d& x, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - x).norm();
}

// distance from x to a CCW convex polygon (0 inside)
double polygon_distance(const Eigen::Vector2d& x, const std::vector<Eigen::Vector2d>& h) {
  if (h.size() == 1) return (x - h[0]).norm();
  if (h.size() == 2) return segment_distance(x, h[0], h[1]);
  bool inside = true;
  for (std::size_t i = 0; i < h.size() && inside; ++i) inside = cross(h[i], h[(i + 1) % h.size()], x) >= 0;
  if (inside) return 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.size(); ++i) best = std::min(best, segment_distance(x, h[i], h[(i + 1) % h.size()]));
  return best;
}

}  // namespace

Mask convex_hull_mask(const LabelField& f, double extra_radius, double ball_radius) {
  const Grid& g = f.grid;
  Mask out = Mask::Constant(g.cells(), false);
  const Mask bounded = f.labels.array() != f.exterior();
  if (!bounded.any() && ball_radius <= 0) return out;
  const double slack = 1e-12 * g.h();
  if (g.dim() == 2) {
    std::vector<Eigen::Vector2d> pts;
    for (Index c = 0; c < g.cells(); ++c)
      if (bounded[c]) pts.push_back(g.center(c));
    if (ball_radius > 0) {
      // circumscribed polygon of B_R
      const int m = 720;
      const double rr = ball_radius / std::cos(std::numbers::pi / m);
      for (int j = 0; j < m; ++j) {
        const double t = 2 * std::numbers::pi * j / m;
        pts.emplace_back(rr * std::cos(t), rr * std::sin(t));
      }
    }
    const auto hull = hull2d(std::move(pts));
    for (Index c = 0; c < g.cells(); ++c) out[c] = polygon_distance(g.center(c), hull) <= extra_radius + slack;
    return out;
  }
  // 3D: outer approximation through support functions on sampled directions
  const auto dirs = sphere_samples(3, 2048);
  std::vector<double> support(dirs.size(), -std::numeric_limits<double>::infinity());
  for (Index c = 0; c < g.cells(); ++c) {
    if (!bounded[c]) continue;
    const Eigen::VectorXd x = g.center(c);
    for (std::size_t j = 0; j < dirs.size(); ++j) support[j] = std::max(support[j], dirs[j].dot(x));
  }
  if (ball_radius > 0)
    for (auto& s : support) s = std::max(s, ball_radius);
  for (Index c = 0; c < g.cells(); ++c) {
    const Eigen::VectorXd x = g.center(c);
    bool in = true;
    for (std::size_t j = 0; j < dirs.size() && in; ++j) in = dirs[j].dot(x) <= support[j] + extra_radius + slack;
    out[c] = in;
  }
  return out;
}

namespace {

double binary_term(const Norm& norm, unsigned pattern) {
  const int d = norm.dim();
  Eigen::VectorXd delta(d);
  const double b0 = (pattern & 1u) ? 1 : 0;
  for (int k = 0; k < d; ++k) delta[k] = ((pattern >> (k + 1)) & 1u ? 1 : 0) - b0;
  return norm(delta);
}

}  // namespace

Eigen::MatrixXd closure_covectors(const Norm& norm) {
  const int d = norm.dim();
  const int vars = d + 1;
  std::vector<int> perm(static_cast<std::size_t>(vars));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Eigen::VectorXd> found;
  do {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(vars);
    unsigned set = 0;
    double prev = 0;
    for (int v : perm) {
      set |= 1u << v;
      const double cur = binary_term(norm, set);
      s[v] = cur - prev;
      prev = cur;
    }
    Eigen::VectorXd c = s.tail(d);
    bool dup = false;
    for (const auto& e : found) dup = dup || (e - c).cwiseAbs().maxCoeff() <= 1e-13;
    if (!dup) found.push_back(c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  Eigen::MatrixXd out(Eigen::Index(found.size()), d);
  for (std::size_t i = 0; i < found.size(); ++i) out.row(Eigen::Index(i)) = found[i].transpose();
  return out;
}

bool local_term_submodular(const Norm& norm) {
  const int vars = norm.dim() + 1;
  const unsigned full = (1u << vars) - 1;
  for (unsigned s = 0; s <= full; ++s)
    for (int i = 0; i < vars; ++i)
      for (int j = i + 1; j < vars; ++j) {
        if ((s >> i) & 1u || (s >> j) & 1u) continue;
        const double lhs = binary_term(norm, s | 1u << i | 1u << j) + binary_term(norm, s);
        const double rhs = binary_term(norm, s | 1u << i) + binary_term(norm, s | 1u << j);
        if (lhs > rhs + 1e-12 * (1 + std::abs(rhs))) return false;
      }
  return true;
}

}  // namespace mmflow
