#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmflow/disttrans.hpp"

#include <random>

using namespace mmflow;

namespace {

Norm l1() {
  Eigen::MatrixXd a(4, 2);
  a << 1, 1, 1, -1, -1, 1, -1, -1;
  return Norm::polyhedral(a);
}

Norm hexagonal() {
  Eigen::MatrixXd a(6, 2);
  for (int k = 0; k < 6; ++k) a.row(k) << std::cos(k * M_PI / 3 + 0.3), 0.8 * std::sin(k * M_PI / 3 + 0.3);
  return Norm::polyhedral(a);
}

Mask random_blobs(const Grid& g, std::mt19937_64& rng, int blobs) {
  std::uniform_real_distribution<double> u(-0.4, 0.4), r(0.05, 0.2);
  Mask m = Mask::Constant(g.cells(), false);
  for (int b = 0; b < blobs; ++b) {
    const Eigen::Vector2d c(u(rng), u(rng));
    const double rad = r(rng);
    for (Index x = 0; x < g.cells(); ++x) m[x] = m[x] || (g.center(x) - c).norm() < rad;
  }
  return m;
}

}  // namespace

TEST_CASE("half-plane distances are exact") {
  // cells outside the grid read as outside the mask, so inside cells are only
  // checked where the dividing facet line is nearer than the grid edges
  const Grid g(2, {10, 20}, 0.5);
  Mask m(g.cells());
  for (Index c = 0; c < g.cells(); ++c) m[c] = g.coords(c)[0] < 4;
  const SignedDistanceField s = signed_dist(m, Norm::euclidean(2), g);
  CHECK_FALSE(s.empty_boundary);
  int checked = 0;
  for (Index c = 0; c < g.cells(); ++c) {
    const Coords x = g.coords(c);
    const double to_facet = (x[0] + 0.5 - 4) * 0.5;
    const double to_edge = (std::min({x[0], x[1], 19 - x[1]}) + 0.5) * 0.5;
    if (to_facet < 0 && -to_facet > to_edge) continue;
    CHECK(std::abs(s[c] - to_facet) <= 1e-12);
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("empty boundary sentinels") {
  const Grid g = Grid::cube(2, 6);
  const SignedDistanceField all = signed_dist(Mask::Constant(g.cells(), true), Norm::euclidean(2), g, Exterior::Inside);
  CHECK(all.empty_boundary);
  CHECK((all.values.array() < 0).all());
  CHECK(std::isinf(all[0]));
  const SignedDistanceField none = signed_dist(Mask::Constant(g.cells(), false), Norm::euclidean(2), g);
  CHECK(none.empty_boundary);
  CHECK((none.values.array() > 0).all());
  CHECK(std::isinf(none[5]));
}

TEST_CASE("single cell under the l1 mobility matches a brute-force facet minimum") {
  const int n = 11;
  const Grid g(2, {n, n}, 1.0);
  Mask m = Mask::Constant(g.cells(), false);
  const Index mid = g.index({5, 5, 0});
  m[mid] = true;
  const Norm psi = l1();
  const SignedDistanceField s = signed_dist(m, psi, g);
  std::vector<Eigen::Vector2d> facets;
  const Eigen::Vector2d c = g.center(mid);
  for (const Eigen::Vector2d& o : {Eigen::Vector2d(0.5, 0), Eigen::Vector2d(-0.5, 0), Eigen::Vector2d(0, 0.5), Eigen::Vector2d(0, -0.5)})
    facets.push_back(c + o);
  for (Index x = 0; x < g.cells(); ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : facets) best = std::min(best, psi(Vec(Eigen::Vector2d(g.center(x)) - f)));
    CHECK(std::abs(s[x]) == doctest::Approx(best).epsilon(1e-12));
    CHECK((s[x] < 0) == (x == mid));
  }
}

TEST_CASE("signed distances are Lipschitz across the wide stencil") {
  // same-side pairs are 1-Lipschitz; a pair straddling the boundary can reach
  // 2 psi(x - y) - 2 s0, which is psi(x - y) on the cheapest stencil edge
  std::mt19937_64 rng(4);
  const Grid g = Grid::cube(2, 24);
  for (const Norm& psi : {Norm::euclidean(2), Norm::diagonal(Eigen::Vector2d(1, 2.5)), l1(), hexagonal()}) {
    for (int t = 0; t < 5; ++t) {
      const SignedDistanceField s = signed_dist(random_blobs(g, rng, 3), psi, g);
      if (s.empty_boundary) continue;
      double cheapest = std::numeric_limits<double>::infinity();
      for (const Coords& o : wide_stencil(2)) cheapest = std::min(cheapest, psi(Vec(Eigen::Vector2d(o[0], o[1]) * g.h())));
      for (Index c = 0; c < g.cells(); ++c) {
        const Coords x = g.coords(c);
        for (const Coords& o : wide_stencil(2)) {
          const Coords y{x[0] + o[0], x[1] + o[1], 0};
          if (!g.contains(y)) continue;
          const double w = psi(Vec(Eigen::Vector2d(o[0], o[1]) * g.h()));
          const double sy = s[g.index(y)];
          const double bound = (s[c] < 0) == (sy < 0) ? w : 2 * w - cheapest;
          REQUIRE(std::abs(s[c] - sy) <= bound * (1 + 1e-12));
          if (w == cheapest) REQUIRE(std::abs(s[c] - sy) <= w * (1 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("inclusion monotonicity and complement antisymmetry") {
  std::mt19937_64 rng(9);
  const Grid g = Grid::cube(2, 20);
  for (const Norm& psi : {Norm::euclidean(2), Norm::diagonal(Eigen::Vector2d(0.6, 1.4)), hexagonal()}) {
    for (int t = 0; t < 40; ++t) {
      const Mask a = random_blobs(g, rng, 2);
      const Mask b = a || random_blobs(g, rng, 2);
      const SignedDistanceField sa = signed_dist(a, psi, g), sb = signed_dist(b, psi, g);
      REQUIRE((sa.values.array() >= sb.values.array()).all());
      const SignedDistanceField sc = signed_dist(!a, psi, g, Exterior::Inside);
      if (sa.empty_boundary) continue;
      REQUIRE((sc.values.array() == -sa.values.array()).all());
    }
  }
}

TEST_CASE("phase distances follow the exterior convention") {
  const Grid g(2, {6, 6}, 1.0);
  Eigen::VectorXi l = Eigen::VectorXi::Constant(36, 2);
  l[g.index({2, 2, 0})] = 1;
  const LabelField f(g, 1, l);
  const SignedDistanceField outer = phase_signed_dist(f, 2, Norm::euclidean(2));
  const SignedDistanceField inner = phase_signed_dist(f, 1, Norm::euclidean(2));
  CHECK((outer.values.array() == -inner.values.array()).all());
  CHECK(phase_distances(f, NormFamily::uniform(Norm::euclidean(2), 2, FamilyRole::Mobilities)).size() == 2);
}

TEST_CASE("dissipation") {
  const Grid g(2, {6, 6}, 0.5);
  const NormFamily psi({Norm::euclidean(2), l1()}, FamilyRole::Mobilities);
  Eigen::VectorXi l = Eigen::VectorXi::Constant(36, 2);
  for (int i = 1; i < 4; ++i)
    for (int j = 1; j < 4; ++j) l[g.index({i, j, 0})] = 1;
  const LabelField prev(g, 1, l);
  CHECK(dissipation(prev, prev, psi) == 0);

  l[g.index({4, 2, 0})] = 1;
  const LabelField grown(g, 1, l);
  const double d1 = std::abs(phase_signed_dist(prev, 1, psi[0])[g.index({4, 2, 0})]);
  const double d2 = std::abs(phase_signed_dist(prev, 2, psi[1])[g.index({4, 2, 0})]);
  CHECK(d1 == doctest::Approx(0.25));
  CHECK(d2 == doctest::Approx(0.25));
  CHECK(dissipation(prev, grown, psi) == doctest::Approx(0.25 * (d1 + d2)));

  // direct recount against per-phase distances on a larger change
  Eigen::VectorXi m = prev.labels;
  for (int j = 0; j < 6; ++j) m[g.index({5, j, 0})] = 1;
  m[g.index({2, 2, 0})] = 2;
  const LabelField cand(g, 1, m);
  double recount = 0;
  for (int p = 1; p <= 2; ++p) {
    const SignedDistanceField s = phase_signed_dist(prev, p, psi[p - 1]);
    for (Index c = 0; c < g.cells(); ++c)
      if ((prev[c] == p) != (cand[c] == p)) recount += 0.25 * std::abs(s[c]);
  }
  CHECK(dissipation(prev, cand, psi) == doctest::Approx(recount));

  const LabelField empty(g, 1, 2);
  CHECK(std::isinf(dissipation(empty, prev, psi)));
  CHECK(dissipation(empty, empty, psi) == 0);
}

TEST_CASE("3D half-space distances are exact") {
  const Grid g(3, {6, 5, 4}, 1.0);
  Mask m(g.cells());
  for (Index c = 0; c < g.cells(); ++c) m[c] = g.coords(c)[2] >= 2;
  const SignedDistanceField s = signed_dist(m, Norm::euclidean(3), g);
  for (Index c = 0; c < g.cells(); ++c)
    if (!m[c]) CHECK(std::abs(s[c] - (2 - (g.coords(c)[2] + 0.5))) <= 1e-12);
}
