#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmflow/flow.hpp"

using namespace mmflow;

namespace {

FlowModel euclidean_model(const Grid& g, int phases) {
  const Norm e = Norm::euclidean(g.dim());
  return {NormFamily::uniform(e, phases, FamilyRole::Anisotropies), NormFamily::uniform(e, phases, FamilyRole::Mobilities),
          Forcing::zero(g, phases)};
}

LabelField disk(const Grid& g, double r) {
  Eigen::VectorXi l(g.cells());
  for (Index c = 0; c < g.cells(); ++c) l[c] = g.center(c).norm() <= r ? 1 : 2;
  return LabelField(g, 1, l);
}

}  // namespace

TEST_CASE("step_index is floor(lambda t) without rounding slips") {
  FlowParams p;
  p.lambda = 10;
  CHECK(p.step_index(0.3) == 3);
  CHECK(p.step_index(0.29) == 2);
  CHECK(p.step_index(0) == 0);
  p.lambda = 3;
  CHECK(p.step_index(0.7) == 2);
  p.lambda = 1000;
  CHECK(p.step_index(0.001 * 7) == 7);
}

TEST_CASE("flow parameters are validated") {
  FlowParams p;
  p.lambda = 16;
  p.horizon = 0.5;
  p.checkpoint_times = {0, 0.25, 0.5};
  CHECK_NOTHROW(p.validate());
  p.checkpoint_times = {0, 0.75};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.checkpoint_times = {0.25, 0.1};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.checkpoint_times = {};
  p.lambda = 0.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("run_flow records every step and maps checkpoints") {
  const Grid g = Grid::cube(2, 24);
  FlowParams p;
  p.lambda = 64;
  p.horizon = 0.1;
  p.checkpoint_times = {0, 0.05, 0.1};
  p.every_step = true;
  int observed = 0;
  const FlowTrace t = run_flow(disk(g, 0.3), euclidean_model(g, 2), p, [&](const StepRecord&, const LabelField&) { ++observed; });
  CHECK(t.steps() == 6);
  CHECK(observed == 6);
  CHECK(t.series.size() == 7);
  CHECK(t.frames.size() == 7);
  REQUIRE(t.checkpoints.size() == 3);
  CHECK(t.checkpoints[1].second == 3);
  CHECK(t.checkpoints[2].second == 6);
  CHECK(t.frames[3].time == doctest::Approx(3.0 / 64));
  for (std::size_t k = 1; k < t.series.size(); ++k) {
    const double before = t.series[k - 1].per_phi + t.series[k - 1].force;
    const double after = t.series[k].per_phi + t.series[k].force;
    CHECK(after <= before + 1e-9);
  }
  CHECK(t.frames.back().field.count(1) < t.frames.front().field.count(1));
}

TEST_CASE("checkpoint-only traces keep just the checkpoint frames") {
  const Grid g = Grid::cube(2, 16);
  FlowParams p;
  p.lambda = 32;
  p.horizon = 0.125;
  p.checkpoint_times = {0, 0.125};
  const FlowTrace t = run_flow(disk(g, 0.3), euclidean_model(g, 2), p);
  CHECK(t.frames.size() == 2);
  CHECK(t.series.size() == 5);
}

TEST_CASE("flows are deterministic") {
  const Grid g = Grid::cube(2, 20);
  FlowParams p;
  p.lambda = 50;
  p.horizon = 0.1;
  p.checkpoint_times = {0.1};
  const FlowTrace a = run_flow(disk(g, 0.25), euclidean_model(g, 2), p);
  const FlowTrace b = run_flow(disk(g, 0.25), euclidean_model(g, 2), p);
  CHECK(a.at_checkpoint(0) == b.at_checkpoint(0));
}

TEST_CASE("extract_gmm with one lambda") {
  const Grid g = Grid::cube(2, 12);
  FlowParams base;
  base.horizon = 0.1;
  base.checkpoint_times = {0, 0.1};
  const GmmResult r = extract_gmm(disk(g, 0.3), euclidean_model(g, 2), {40}, base, 0.05);
  REQUIRE(r.cauchy.size() == 2);
  CHECK(r.cauchy[1].rows() == 1);
  CHECK(r.cauchy[1](0, 0) == 0);
}

TEST_CASE("extract_gmm matrix is symmetric and matches sym_diff") {
  const Grid g = Grid::cube(2, 16);
  FlowParams base;
  base.horizon = 0.1;
  base.checkpoint_times = {0.1};
  const GmmResult r = extract_gmm(disk(g, 0.3), euclidean_model(g, 2), {40, 80, 160}, base, 0.05, 2);
  const Eigen::MatrixXd& m = r.cauchy[0];
  CHECK(m.isApprox(m.transpose()));
  CHECK(m(0, 2) == doctest::Approx(sym_diff_volume(r.traces[0].at_checkpoint(0), r.traces[2].at_checkpoint(0)).total));
}

TEST_CASE("comparison hypotheses") {
  const Grid g = Grid::cube(2, 12);
  Eigen::VectorXi l(g.cells());
  for (Index c = 0; c < g.cells(); ++c) l[c] = g.center(c).norm() < 0.35 ? (g.center(c)[0] < 0 ? 1 : 2) : 3;
  const LabelField f(g, 2, l);
  FlowModel m = euclidean_model(g, 3);
  Mask seed = f.mask(1);
  CHECK_NOTHROW(validate_comparison(f, seed, 1, m));
  seed = Mask::Constant(g.cells(), true);
  CHECK_THROWS_AS(validate_comparison(f, seed, 1, m), std::invalid_argument);
  seed = f.mask(1);
  m.forcing.fields[0].values.setConstant(1);
  CHECK_THROWS_AS(validate_comparison(f, seed, 1, m), std::invalid_argument);
  m = euclidean_model(g, 3);
  m.anisotropies = NormFamily({Norm::euclidean(2), Norm::euclidean(2).scaled(2), Norm::euclidean(2)}, FamilyRole::Anisotropies);
  CHECK_THROWS_AS(validate_comparison(f, seed, 1, m), std::invalid_argument);
}

TEST_CASE("seed field labels") {
  const Grid g = Grid::cube(2, 4);
  Mask s = Mask::Constant(g.cells(), false);
  s[5] = true;
  const LabelField inside = seed_field(g, s, false);
  CHECK(inside[5] == 1);
  CHECK(inside.count(1) == 1);
  const LabelField outside = seed_field(g, s, true);
  CHECK(outside[5] == 2);
  CHECK(outside.count(1) == 15);
}

TEST_CASE("comparison run keeps the two-phase set inside its phase") {
  const Grid g = Grid::cube(2, 20);
  Eigen::VectorXi l(g.cells());
  for (Index c = 0; c < g.cells(); ++c) {
    const auto x = g.center(c);
    l[c] = std::abs(x[1]) < 0.3 && std::abs(x[0]) < 0.35 ? (x[0] < 0 ? 1 : 2) : 3;
  }
  const LabelField f(g, 2, l);
  Mask seed(g.cells());
  for (Index c = 0; c < g.cells(); ++c) {
    const auto x = g.center(c);
    seed[c] = std::abs(x[1]) < 0.2 && x[0] > -0.3 && x[0] < -0.1;
  }
  FlowParams p;
  p.lambda = 100;
  p.horizon = 0.05;
  const ComparisonResult r = run_comparison(f, seed, 1, euclidean_model(g, 3), p);
  REQUIRE(r.series.size() == 6);
  for (const ComparisonStep& s : r.series) CHECK(s.violations <= s.band / 200);
}
