#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmflow/norms.hpp"

#include <random>

using namespace mmflow;

namespace {

Norm l1() {
  Eigen::MatrixXd a(4, 2);
  a << 1, 1, 1, -1, -1, 1, -1, -1;
  return Norm::polyhedral(a, "l1");
}

Norm linf() {
  Eigen::MatrixXd a(4, 2);
  a << 1, 0, -1, 0, 0, 1, 0, -1;
  return Norm::polyhedral(a, "linf");
}

Vec v2(double x, double y) { return Eigen::Vector2d(x, y); }

}  // namespace

TEST_CASE("eval on closed-form examples") {
  CHECK(Norm::euclidean(2)(v2(3, 4)) == doctest::Approx(5));
  CHECK(l1()(v2(1, -2)) == doctest::Approx(3));
  CHECK(linf()(v2(1, -2)) == doctest::Approx(2));
  CHECK(Norm::diagonal(v2(2, 1))(v2(1, 1)) == doctest::Approx(std::sqrt(5.0)));
  CHECK(Norm::euclidean(3)(Vec::Zero(3)) == 0);
}

TEST_CASE("dual_eval on closed-form examples") {
  CHECK(Norm::euclidean(2).dual(v2(0, 2)) == doctest::Approx(2));
  CHECK(Norm::diagonal(v2(2, 1)).dual(v2(2, 0)) == doctest::Approx(1));
  CHECK(l1().dual(v2(1, 1)) == doctest::Approx(1));
  CHECK(l1().dual(v2(3, -1)) == doctest::Approx(3));
  CHECK(linf().dual(v2(1, -2)) == doctest::Approx(3));
}

TEST_CASE("dual is the support function of the unit ball") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Eigen::MatrixXd hex(6, 2);
  for (int k = 0; k < 6; ++k) hex.row(k) << std::cos(k * M_PI / 3 + 0.2), 1.3 * std::sin(k * M_PI / 3 + 0.2);
  for (const Norm& n : {Norm::euclidean(2), Norm::diagonal(v2(0.7, 1.9)), l1(), linf(), Norm::polyhedral(hex)}) {
    for (int t = 0; t < 50; ++t) {
      const Vec xi = v2(g(rng), g(rng));
      double best = 0;
      for (int k = 0; k < 20000; ++k) {
        const double a = 2 * M_PI * k / 20000.0;
        const Vec v = v2(std::cos(a), std::sin(a));
        best = std::max(best, xi.dot(v) / n(v));
      }
      // angular sampling can only underestimate the supremum
      CHECK(n.dual(xi) >= best * (1 - 1e-12));
      CHECK(n.dual(xi) == doctest::Approx(best).epsilon(1e-4));
    }
  }
}

TEST_CASE("norm axioms on random vectors") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd cube(6, 3);
  cube << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  const std::vector<Norm> norms{Norm::euclidean(3), Norm::diagonal(Eigen::Vector3d(0.5, 1, 2)), Norm::polyhedral(cube)};
  for (const Norm& n : norms) {
    for (int t = 0; t < 100000; ++t) {
      const Vec v = Eigen::Vector3d(g(rng), g(rng), g(rng));
      const Vec w = Eigen::Vector3d(g(rng), g(rng), g(rng));
      const double s = g(rng);
      REQUIRE(n(v) > 0);
      REQUIRE(n(v + w) <= (n(v) + n(w)) * (1 + 1e-12));
      REQUIRE(std::abs(n(s * v) - std::abs(s) * n(v)) <= 1e-12 * std::abs(s) * n(v) + 1e-300);
    }
  }
}

TEST_CASE("euclidean is self-dual") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const Norm e = Norm::euclidean(3);
  for (int t = 0; t < 1000; ++t) {
    const Vec v = Eigen::Vector3d(g(rng), g(rng), g(rng));
    CHECK(std::abs(e.dual(v) - e(v)) <= 1e-10);
  }
}

TEST_CASE("malformed polyhedral lists are rejected") {
  Eigen::MatrixXd half(2, 2);
  half << 1, 0, 0, 1;
  CHECK_THROWS_AS(Norm::polyhedral(half), std::invalid_argument);
  Eigen::MatrixXd flat(2, 2);
  flat << 1, 0, -1, 0;
  CHECK_THROWS_AS(Norm::polyhedral(flat), std::invalid_argument);
  CHECK_THROWS_AS(Norm::polyhedral(Eigen::MatrixXd(0, 2)), std::invalid_argument);
  CHECK_THROWS_AS(Norm::diagonal(v2(1, 0)), std::invalid_argument);
  CHECK_THROWS_AS(Norm::diagonal(v2(1, -1)), std::invalid_argument);
}

TEST_CASE("family_bounds and kappa") {
  const Norm e = Norm::euclidean(2);
  const FamilyRole r = FamilyRole::Anisotropies;
  CHECK(family_bounds(NormFamily::uniform(e, 2, r), 256).kappa == 0);
  CHECK(family_bounds(NormFamily({e, e.scaled(1.25)}, r), 256).kappa == doctest::Approx(0.25));
  // |v|_1 - |v|_2 on the unit circle peaks at the diagonal
  const FamilyBounds b = family_bounds(NormFamily({e, l1()}, r), 4096);
  CHECK(b.kappa == doctest::Approx(std::sqrt(2.0) - 1).epsilon(1e-5));
  CHECK(b.c_lower == doctest::Approx(1));
  CHECK(b.c_upper == doctest::Approx(std::sqrt(2.0)));
  CHECK(family_bounds(NormFamily({e, l1(), l1()}, r), 256).kappa == 0);
  CHECK(b.kappa <= 2 * b.c_upper);
}

TEST_CASE("family_bounds is monotone in the sample count") {
  Eigen::MatrixXd hex(6, 2);
  for (int k = 0; k < 6; ++k) hex.row(k) << std::cos(k * M_PI / 3 + 0.1), std::sin(k * M_PI / 3 + 0.1);
  const NormFamily fam({Norm::polyhedral(hex), Norm::diagonal(v2(1, 1.3)), l1()}, FamilyRole::Mobilities);
  FamilyBounds prev = family_bounds(fam, 64);
  for (int s = 128; s <= 4096; s *= 2) {
    const FamilyBounds b = family_bounds(fam, s);
    CHECK(b.c_lower <= prev.c_lower);
    CHECK(b.c_upper >= prev.c_upper);
    prev = b;
  }
}

TEST_CASE("multiphase condition") {
  ConditionCheck c = check_multiphase_condition({1, 1, 0}, 3);
  CHECK(c.holds);
  CHECK(c.margin == doctest::Approx(2.0 / 3.0));
  c = check_multiphase_condition({1, 1, 0.41421}, 2);
  CHECK(c.holds);
  CHECK(c.margin == doctest::Approx(0.58579));
  c = check_multiphase_condition({1, 1, 0.41421}, 5);
  CHECK_FALSE(c.holds);
  CHECK(c.margin == doctest::Approx(-0.01421));
}

TEST_CASE("wulff boundary") {
  const auto circle = wulff_boundary(Norm::euclidean(2), 4);
  REQUIRE(circle.size() == 4);
  CHECK(circle[0].isApprox(Eigen::Vector2d(1, 0)));
  CHECK(circle[1].x() == doctest::Approx(0).epsilon(1e-12));
  CHECK(circle[1].y() == doctest::Approx(1));
  const auto diamond = wulff_boundary(l1(), 4);
  CHECK(diamond[2].x() == doctest::Approx(-1));
  CHECK(std::abs(diamond[2].y()) < 1e-12);
  const auto ellipse = wulff_boundary(Norm::diagonal(v2(2, 1)), 4);
  CHECK(ellipse[0].x() == doctest::Approx(0.5));
  CHECK(ellipse[3].y() == doctest::Approx(-1));
  for (const Norm& n : {Norm::diagonal(v2(0.6, 1.7)), l1(), linf()}) {
    const auto pts = wulff_boundary(n, 360);
    double prev_angle = -1;
    for (const auto& p : pts) {
      CHECK(std::abs(n(Vec(p)) - 1) <= 1e-10);
      double a = std::atan2(p.y(), p.x());
      if (a < 0) a += 2 * M_PI;
      CHECK(a > prev_angle);
      prev_angle = a;
    }
  }
}
