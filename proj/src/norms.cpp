#include "mmflow/norms.hpp"

#include <cstdint>

namespace mmflow {

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / double(base);
  double f = inv;
  double r = 0;
  while (i > 0) {
    r += f * double(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

// Exact sup of |sqrt(a.x) - sqrt(b.x)| over the simplex x_k = v_k^2, |v| = 1.
// Interior critical points only exist when a, b and 1 are linearly dependent,
// in which case the edges attain the same extremes; vertices and edges suffice.
double quadratic_sup_difference(const Vec& a, const Vec& b) {
  const int d = int(a.size());
  auto f = [](double A, double B) { return std::abs(std::sqrt(std::max(A, 0.0)) - std::sqrt(std::max(B, 0.0))); };
  double best = 0;
  for (int k = 0; k < d; ++k) best = std::max(best, f(a[k], b[k]));
  for (int k = 0; k < d; ++k) {
    for (int l = k + 1; l < d; ++l) {
      const double al = a[l], bl = b[l];
      const double alpha = a[k] - al, beta = b[k] - bl;
      const double den = alpha * beta * (alpha - beta);
      if (den == 0) continue;
      const double s = (beta * beta * al - alpha * alpha * bl) / den;
      if (s > 0 && s < 1) best = std::max(best, f(al + s * alpha, bl + s * beta));
    }
  }
  return best;
}

}  // namespace

std::vector<Vec> sphere_samples(int dim, int count) {
  std::vector<Vec> out;
  out.reserve(std::size_t(std::max(count, 0)));
  if (dim == 2) {
    // j * 2pi / count is not nested under doubling unless we order by bit
    // reversal; use the base-2 radical inverse so prefixes nest.
    for (int i = 0; i < count; ++i) {
      const double t = 2 * std::numbers::pi * radical_inverse(std::uint64_t(i), 2);
      Vec v(2);
      v << std::cos(t), std::sin(t);
      out.push_back(v);
    }
  } else if (dim == 3) {
    for (int i = 0; i < count; ++i) {
      const double z = 1 - 2 * radical_inverse(std::uint64_t(i), 2);
      const double t = 2 * std::numbers::pi * radical_inverse(std::uint64_t(i), 3);
      const double r = std::sqrt(std::max(0.0, 1 - z * z));
      Vec v(3);
      v << r * std::cos(t), r * std::sin(t), z;
      out.push_back(v);
    }
  } else {
    throw std::invalid_argument("sphere_samples: dimension must be 2 or 3");
  }
  return out;
}

double sup_difference(const Norm& a, const Norm& b, int samples) {
  if (a.dim() != b.dim()) throw std::invalid_argument("sup_difference: dimension mismatch");
  if (a.is_quadratic() && b.is_quadratic())
    return quadratic_sup_difference(a.quadratic_weights(), b.quadratic_weights());
  double best = 0;
  auto probe = [&](const Vec& v) {
    const double n = v.norm();
    if (n == 0) return;
    const Vec u = v / n;
    best = std::max(best, std::abs(a(u) - b(u)));
  };
  for (const auto& v : sphere_samples(a.dim(), samples)) probe(v);
  // kinks of polyhedral norms sit at facet normals and vertex directions
  for (const Norm* n : {&a, &b}) {
    if (n->kind() != NormKind::Polyhedral) continue;
    for (Eigen::Index i = 0; i < n->covectors().rows(); ++i) probe(n->covectors().row(i).transpose());
    for (Eigen::Index i = 0; i < n->vertices().rows(); ++i) probe(n->vertices().row(i).transpose());
  }
  for (int k = 0; k < a.dim(); ++k) probe(Vec::Unit(a.dim(), k));
  return best;
}

FamilyBounds family_bounds(const NormFamily& family, int samples) {
  if (samples < 64) throw std::invalid_argument("family_bounds: samples must be >= 64");
  family.validate();
  FamilyBounds b;
  b.c_lower = std::numeric_limits<double>::infinity();
  b.c_upper = 0;
  for (const auto& m : family.members) {
    b.c_lower = std::min(b.c_lower, m.sphere_min());
    b.c_upper = std::max(b.c_upper, m.sphere_max());
  }
  b.kappa = std::numeric_limits<double>::infinity();
  for (int i = 0; i < family.size(); ++i) {
    for (int j = i + 1; j < family.size(); ++j) {
      if (family[i] == family[j]) {
        b.kappa = 0;
        continue;
      }
      b.kappa = std::min(b.kappa, sup_difference(family[i], family[j], samples));
    }
  }
  return b;
}

ConditionCheck check_multiphase_condition(const FamilyBounds& bounds, int bounded_phases) {
  if (bounded_phases < 1) throw std::invalid_argument("check_multiphase_condition: N must be >= 1");
  ConditionCheck c;
  c.margin = 2 * bounds.c_lower / bounded_phases - bounds.kappa;
  c.holds = c.margin > 0;
  return c;
}

std::vector<Eigen::Vector2d> wulff_boundary(const Norm& norm, int k) {
  if (norm.dim() != 2) throw std::invalid_argument("wulff_boundary: 2D norms only");
  if (k < 4) throw std::invalid_argument("wulff_boundary: need at least 4 points");
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(std::size_t(k));
  for (int j = 0; j < k; ++j) {
    const double t = 2 * std::numbers::pi * double(j) / double(k);
    Eigen::Vector2d u(std::cos(t), std::sin(t));
    // snap axis directions so the quarter points are exact
    if (4 * j % k == 0) {
      const int q = 4 * j / k;
      u = Eigen::Vector2d(q == 0 ? 1 : q == 2 ? -1 : 0, q == 1 ? 1 : q == 3 ? -1 : 0);
    }
    const Vec uv = u;
    pts.push_back(u / norm(uv));
  }
  return pts;
}

}  // namespace mmflow
