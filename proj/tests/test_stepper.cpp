#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmflow/stepper.hpp"

#include <random>

using namespace mmflow;

namespace {

NormFamily same(const Norm& n, int phases, FamilyRole r) { return NormFamily::uniform(n, phases, r); }

StepProblem euclidean_problem(const LabelField& prev, double lambda) {
  const Norm e = Norm::euclidean(prev.grid.dim());
  return StepProblem(prev, same(e, prev.phases(), FamilyRole::Anisotropies), same(e, prev.phases(), FamilyRole::Mobilities),
                     Forcing::zero(prev.grid, prev.phases()), lambda);
}

// Exhaustive minimum of step_energy over every labelling of the grid.
double brute_minimum(const StepProblem& p) {
  const Index cells = p.prev.cells();
  const int phases = p.prev.phases();
  Eigen::VectorXi l = Eigen::VectorXi::Ones(cells);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    best = std::min(best, step_energy(LabelField(p.prev.grid, p.prev.bounded_phases, l), p).total);
    Index k = 0;
    while (k < cells && l[k] == phases) l[k++] = 1;
    if (k == cells) break;
    ++l[k];
  }
  return best;
}

LabelField centered_square_4x4() {
  const Grid g(2, {4, 4}, 1.0);
  Eigen::VectorXi l = Eigen::VectorXi::Constant(16, 2);
  for (int i = 1; i < 3; ++i)
    for (int j = 1; j < 3; ++j) l[g.index({i, j, 0})] = 1;
  return LabelField(g, 1, l);
}

}  // namespace

TEST_CASE("step problems validate lambda and family sizes") {
  const LabelField f = centered_square_4x4();
  CHECK_THROWS_AS(euclidean_problem(f, 0.5).validate(), std::invalid_argument);
  StepProblem p = euclidean_problem(f, 2);
  CHECK_NOTHROW(p.validate());
  p.mobilities = same(Norm::euclidean(2), 3, FamilyRole::Mobilities);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("step_energy of the previous field") {
  const LabelField f = centered_square_4x4();
  StepProblem p = euclidean_problem(f, 3);
  p.forcing.fields[0].values.setConstant(0.5);
  const StepReport r = step_energy(f, p);
  CHECK(r.energy_dissipation == 0);
  CHECK(r.energy_perimeter == doctest::Approx(per_phi(f, p.anisotropies).total));
  CHECK(r.energy_force == doctest::Approx(2.0));
  CHECK(r.total == doctest::Approx(r.energy_perimeter + r.energy_force));
}

TEST_CASE("step_energy is infinite when an empty phase grows") {
  const Grid g(2, {3, 3}, 1.0);
  Eigen::VectorXi l = Eigen::VectorXi::Constant(9, 3);
  l[0] = 1;
  const LabelField prev(g, 2, l);
  l[4] = 2;
  CHECK(std::isinf(step_energy(LabelField(g, 2, l), euclidean_problem(prev, 2)).total));
}

TEST_CASE("step_energy matches a term-by-term recount") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pick(1, 3);
  std::normal_distribution<double> noise;
  const Grid g(2, {4, 4}, 0.25);
  for (int t = 0; t < 30; ++t) {
    Eigen::VectorXi a(16), b(16);
    for (Index c = 0; c < 16; ++c) {
      a[c] = pick(rng);
      b[c] = pick(rng);
    }
    const LabelField prev(g, 2, a), cand(g, 2, b);
    const NormFamily phi({Norm::euclidean(2), Norm::diagonal(Eigen::Vector2d(1, 2)), Norm::euclidean(2)},
                         FamilyRole::Anisotropies);
    const NormFamily psi({Norm::diagonal(Eigen::Vector2d(2, 1)), Norm::euclidean(2), Norm::euclidean(2)},
                         FamilyRole::Mobilities);
    Forcing h = Forcing::zero(g, 3);
    for (auto& f : h.fields)
      for (Index c = 0; c < 16; ++c) f.values[c] = noise(rng);
    h.support_radius = 10;
    const StepProblem p(prev, phi, psi, h, 3.5);

    double perimeter = 0, force = 0, diss = 0;
    for (int j = 1; j <= 3; ++j) {
      Eigen::VectorXd chi(16);
      for (Index c = 0; c < 16; ++c) chi[c] = b[c] == j ? 1 : 0;
      perimeter += perimeter_phi(chi, phi[j - 1], g, j == 3 ? 1 : 0);
      const SignedDistanceField s = phase_signed_dist(prev, j, psi[j - 1]);
      for (Index c = 0; c < 16; ++c) {
        if (b[c] == j && j < 3) force += (h.fields[std::size_t(j - 1)].values[c] - h.fields[2].values[c]) * g.cell_volume();
        if ((a[c] == j) != (b[c] == j)) diss += std::abs(s[c]) * g.cell_volume();
      }
    }
    const StepReport r = step_energy(cand, p);
    CHECK(r.energy_perimeter == doctest::Approx(perimeter).epsilon(1e-12));
    CHECK(r.energy_force == doctest::Approx(force).epsilon(1e-12));
    CHECK(r.energy_dissipation == doctest::Approx(diss).epsilon(1e-12));
    CHECK(std::abs(r.total - (perimeter + force + 3.5 * diss)) <= 1e-9);
  }
}

TEST_CASE("two-phase step on the 4x4 square attains the exhaustive minimum") {
  const StepProblem p = euclidean_problem(centered_square_4x4(), 4);
  const StepResult r = step_two_phase(p);
  CHECK(r.report.converged);
  CHECK(r.report.total == doctest::Approx(brute_minimum(p)).epsilon(1e-6));
  CHECK(std::abs(r.report.total - step_energy(r.field, p).total) <= 1e-9);
}

TEST_CASE("two-phase identity and empty cases") {
  const StepProblem big = euclidean_problem(centered_square_4x4(), 1e6);
  CHECK(step_two_phase(big).field == big.prev);
  const LabelField empty(Grid::cube(2, 8), 1, 2);
  const StepResult r = step_two_phase(euclidean_problem(empty, 5));
  CHECK(r.field == empty);
}

TEST_CASE("two-phase output is unchanged when energy is rescaled") {
  std::mt19937_64 rng(23);
  const Grid g = Grid::cube(2, 12);
  Eigen::VectorXi l(g.cells());
  for (Index c = 0; c < g.cells(); ++c) l[c] = g.center(c).norm() < 0.3 ? 1 : 2;
  const LabelField prev(g, 1, l);
  std::normal_distribution<double> noise;
  Forcing h = Forcing::zero(g, 2);
  for (Index c = 0; c < g.cells(); ++c) h.fields[0].values[c] = 0.5 * noise(rng);
  h.support_radius = 1;
  const Norm phi = Norm::diagonal(Eigen::Vector2d(1, 1.4));
  const Norm psi = Norm::euclidean(2);
  const double scale = 3;
  Forcing hs = h;
  hs.fields[0].values *= scale;
  const StepProblem a(prev, same(phi, 2, FamilyRole::Anisotropies), same(psi, 2, FamilyRole::Mobilities), h, 40);
  const StepProblem b(prev, same(phi.scaled(scale), 2, FamilyRole::Anisotropies), same(psi, 2, FamilyRole::Mobilities), hs,
                      40 * scale);
  SolverSettings tight;
  tight.gap_tol = 1e-10;
  tight.max_iters = 100000;
  const StepResult ra = step_two_phase(a, tight), rb = step_two_phase(b, tight);
  CHECK(ra.field == rb.field);
  CHECK(rb.report.total == doctest::Approx(scale * ra.report.total));
}

TEST_CASE("multiphase step on tricolour stripes is near the exhaustive minimum") {
  const Grid g(2, {3, 3}, 1.0);
  Eigen::VectorXi l(9);
  for (Index c = 0; c < 9; ++c) l[c] = g.coords(c)[0] + 1;
  const StepProblem p = euclidean_problem(LabelField(g, 2, l), 2);
  const StepResult r = step_multiphase(p);
  const double best = brute_minimum(p);
  CHECK(r.report.total <= best + 0.02 * std::abs(best) + 1e-9);
  CHECK(r.report.total <= step_energy(p.prev, p).total + 1e-12);
}

TEST_CASE("multiphase identity at huge lambda and frozen phases") {
  const Grid g = Grid::cube(2, 10);
  Eigen::VectorXi l(g.cells());
  for (Index c = 0; c < g.cells(); ++c) {
    const auto x = g.center(c);
    l[c] = x.norm() < 0.3 ? (x[0] < 0 ? 1 : 2) : 4;
  }
  const LabelField prev(g, 3, l);
  CHECK(step_multiphase(euclidean_problem(prev, 1e6)).field == prev);
  const StepResult r = step_multiphase(euclidean_problem(prev, 20));
  CHECK(r.field.count(3) == 0);
  CHECK(r.report.total <= step_energy(prev, euclidean_problem(prev, 20)).total + 1e-12);
}

TEST_CASE("oracle_minimize") {
  const Grid g(2, {2, 2}, 1.0);
  const LabelField none(g, 1, 2);
  const OracleResult r = oracle_minimize(euclidean_problem(none, 3));
  CHECK(r.field == none);
  CHECK(r.energy == 0);

  Eigen::VectorXi l = Eigen::VectorXi::Constant(4, 3);
  l[0] = 1;
  l[1] = 2;
  l[2] = 2;
  l[3] = 2;
  // phase 2 has a boundary, phase 1 too; everything is active
  const StepProblem p = euclidean_problem(LabelField(g, 2, l), 2);
  CHECK(oracle_minimize(p).energy == doctest::Approx(brute_minimum(p)));
  CHECK_THROWS_AS(oracle_minimize(euclidean_problem(centered_square_4x4(), 2), 15), TooLarge);
}

TEST_CASE("oracle_minimize agrees with the two-phase solver on random costs") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise;
  std::bernoulli_distribution coin(0.5);
  const Grid g(2, {3, 3}, 1.0);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXi l(9);
    for (Index c = 0; c < 9; ++c) l[c] = coin(rng) ? 1 : 2;
    if (l.minCoeff() == l.maxCoeff()) l[4] = 3 - l[4];
    StepProblem p = euclidean_problem(LabelField(g, 1, l), 1 + 4 * std::abs(noise(rng)));
    for (Index c = 0; c < 9; ++c) p.forcing.fields[0].values[c] = noise(rng);
    p.forcing.support_radius = 10;
    const StepResult s = step_two_phase(p);
    CHECK(s.report.total == doctest::Approx(oracle_minimize(p).energy).epsilon(1e-6));
  }
}
