#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmflow/diagnostics.hpp"

#include <numbers>
#include <random>

using namespace mmflow;

namespace {

constexpr double pi = std::numbers::pi;

LabelField disk(const Grid& g, double r, Eigen::Vector2d center = Eigen::Vector2d::Zero()) {
  Eigen::VectorXi l(g.cells());
  for (Index c = 0; c < g.cells(); ++c) l[c] = (Eigen::Vector2d(g.center(c)) - center).norm() <= r ? 1 : 2;
  return LabelField(g, 1, l);
}

FlowTrace trace_of(const std::vector<std::pair<double, LabelField>>& frames, double lambda) {
  FlowTrace t;
  t.params.lambda = lambda;
  t.params.every_step = true;
  for (const auto& [time, f] : frames) t.frames.push_back({Index(std::llround(time * lambda)), time, f});
  return t;
}

}  // namespace

TEST_CASE("density bounds from their closed forms") {
  DensityInputs in;
  in.c_phi = 1;
  in.C_phi = 2;
  in.kappa = 0.2;
  in.phases = 3;
  in.dim = 2;
  in.lambda1 = 4;
  in.lambda2 = 0;
  in.r0 = 1;
  const DensityBounds b = density_bounds(in);
  // (1 - 2 * 0.1) / (2 + 8 - 0.4)
  CHECK(b.gamma == doctest::Approx(1.0 / 12));
  CHECK(b.lower_bounds_hold);
  CHECK(b.lower_vol_bound == doctest::Approx(1.0 / 144));
  CHECK(b.upper_vol_bound == doctest::Approx(1 - 1.0 / 36));
  CHECK(b.upper_per_bound == doctest::Approx(2.5 * 2 * pi));
  CHECK(b.beta1 == doctest::Approx(2.0 / 16));
  CHECK(b.r_tilde <= b.r_hat);
  CHECK(b.r_hat <= in.r0);

  in.kappa = 1.2;
  const DensityBounds off = density_bounds(in);
  CHECK_FALSE(off.lower_bounds_hold);
  CHECK(off.r_tilde == 0);

  in.phases = 1;
  CHECK_THROWS_AS(density_bounds(in), std::invalid_argument);
}

TEST_CASE("gamma is positive exactly below the kappa threshold") {
  for (int phases : {2, 3, 5}) {
    DensityInputs in;
    in.c_phi = 1.5;
    in.C_phi = 2;
    in.phases = phases;
    const double threshold = 2 * in.c_phi / (phases - 1);
    in.kappa = 0.99 * threshold;
    CHECK(density_bounds(in).gamma > 0);
    in.kappa = 1.01 * threshold;
    CHECK(density_bounds(in).gamma < 0);
  }
}

TEST_CASE("scheme constants from their closed forms") {
  SchemeInputs s;
  s.dim = 2;
  s.c_phi = 1;
  s.C_phi = 1.5;
  s.c_psi = 0.5;
  s.C_psi = 2;
  s.p = 4;
  s.lambda = 100;
  const SchemeConstants k = scheme_constants(s);
  CHECK(k.C1 == doctest::Approx(16 * std::sqrt(std::pow(6.0, 3) * 2)));
  const double c4 = 2 * pi * (std::sqrt(2.0) - 1) / std::pow(2.0, 2.5) * (1.0 / 6);
  CHECK(k.C4 == doctest::Approx(c4));
  CHECK(k.C6 == doctest::Approx(25 * pi / (2 * c4) + 1));
  CHECK(k.C2 == 0);
  CHECK(k.c3_radius_scale == doctest::Approx(k.C3 / 10));
  s.p = 2;
  CHECK_THROWS_AS(scheme_constants(s), std::invalid_argument);
}

TEST_CASE("density ratios of a large disk approach one half") {
  const Grid g = Grid::cube(2, 128);
  const DensityReport r = density_report(disk(g, 0.4), {8 * g.h()});
  REQUIRE(r.phases.size() == 1);
  CHECK(r.phases[0].samples > 100);
  CHECK(r.phases[0].min_vol >= 0.4);
  CHECK(r.phases[0].max_vol <= 0.6);
  CHECK(r.theta > 1.5);
}

TEST_CASE("single-cell density at r = 2h is a direct cell count") {
  const Grid g = Grid::cube(2, 16);
  Eigen::VectorXi l = Eigen::VectorXi::Constant(g.cells(), 2);
  l[g.index({8, 8, 0})] = 1;
  int ball = 0;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) ball += i * i + j * j <= 4 ? 1 : 0;
  const DensityReport r = density_report(LabelField(g, 1, l), {2 * g.h(), g.h()});
  CHECK(r.radii.size() == 1);
  CHECK(r.phases[0].min_vol == doctest::Approx(1.0 / ball));

  DensityInputs in;
  in.phases = 2;
  const DensityBounds b = density_bounds(in);
  const DensityReport flagged = density_report(LabelField(g, 1, l), b, {2 * g.h()});
  // the 2h / r discretization slack absorbs the whole bound at r = 2h
  CHECK(flagged.phases[0].samples == 1);
  CHECK(flagged.phases[0].lower_vol_violations == 0);
  CHECK(1.0 / ball > b.lower_vol_bound);
}

TEST_CASE("an empty radius window is reported") {
  const Grid g = Grid::cube(2, 32);
  DensityInputs in;
  in.phases = 2;
  in.lambda1 = 1e6;
  const DensityBounds b = density_bounds(in);
  CHECK(b.r_hat < 2 * g.h());
  CHECK(density_report(disk(g, 0.3), b, {2 * g.h(), 4 * g.h()}).window_empty);
}

TEST_CASE("volume-distance inequality") {
  const Grid g = Grid::cube(2, 32);
  const Mask a = disk(g, 0.25).mask(1);
  const VolumeDistance same = check_volume_distance(a, a, g, 1, 0.25, g.h());
  CHECK(same.lhs == 0);
  CHECK(same.holds);

  // b = a plus its outer ring of cells
  Mask b = a;
  for (Index c = 0; c < g.cells(); ++c) {
    const Coords x = g.coords(c);
    for (int k = 0; k < 2; ++k)
      for (int s : {-1, 1}) {
        Coords y = x;
        y[std::size_t(k)] += s;
        if (g.contains(y) && a[g.index(y)]) b[c] = true;
      }
  }
  const Index ring = (b && !a).count();
  REQUIRE(ring > 0);
  const VolumeDistance v = check_volume_distance(a, b, g, 1, 0.25, g.h());
  CHECK(v.lhs == doctest::Approx(ring * g.cell_volume()));
  const double per = perimeter_phi(a.cast<double>(), Norm::euclidean(2), g);
  CHECK(v.rhs >= 25 * pi * per * g.h());
  CHECK(v.holds);
  CHECK_THROWS_AS(check_volume_distance(a, b, g, 0, 0.25, g.h()), std::invalid_argument);
}

TEST_CASE("holder fit on a stationary trace") {
  const Grid g = Grid::cube(2, 16);
  const LabelField f = disk(g, 0.3);
  const FlowTrace t = trace_of({{0, f}, {0.1, f}, {0.2, f}, {0.3, f}}, 10);
  const HolderFit fit = holder_fit(t, holder_pairs(t, 1));
  CHECK(fit.stationary);
  CHECK(fit.pairs == 0);
}

TEST_CASE("holder fit on closed-form shrinking circles") {
  // R(t)^2 = R0^2 - 2t; away from extinction the area is Lipschitz in t
  const Grid g = Grid::cube(2, 256);
  std::vector<std::pair<double, LabelField>> frames;
  for (int k = 0; k <= 8; ++k) {
    const double t = 0.002 * k;
    frames.emplace_back(t, disk(g, std::sqrt(0.09 - 2 * t)));
  }
  const FlowTrace t = trace_of(frames, 500);
  const auto pairs = holder_pairs(t, 1);
  CHECK(pairs.size() == 28);
  const HolderFit fit = holder_fit(t, pairs, 1.0, 2 * pi * 0.3);
  CHECK(fit.exponent >= 0.5);
  CHECK(fit.exponent == doctest::Approx(1).epsilon(0.1));
  // both labels change, so |G(t) delta G(t')| = 2 * 2 pi |t - t'|
  CHECK(fit.constant == doctest::Approx(4 * pi).epsilon(0.15));
}

TEST_CASE("displacement scaling skips identity traces") {
  FlowTrace still;
  still.params.lambda = 64;
  still.series.resize(3);
  std::vector<FlowTrace> traces{still};
  for (double lambda : {128.0, 256.0, 512.0}) {
    FlowTrace t;
    t.params.lambda = lambda;
    t.series.resize(2);
    t.series[1].displacement = 3 / std::sqrt(lambda);
    traces.push_back(t);
  }
  const DisplacementFit fit = displacement_scaling(traces, 3.5);
  CHECK_FALSE(fit.used[0]);
  CHECK(fit.slope == doctest::Approx(-0.5));
  CHECK(fit.within_c1[1]);
  CHECK_FALSE(displacement_scaling(traces, 2.0).within_c1[1]);
}

TEST_CASE("extinction time") {
  const Grid g = Grid::cube(2, 8);
  const FlowTrace empty = trace_of({{0, LabelField(g, 1, 2)}}, 10);
  REQUIRE(first_extinction(empty));
  CHECK(*first_extinction(empty) == 0);
  const FlowTrace shrink = trace_of({{0, disk(g, 0.3)}, {0.1, disk(g, 0.1)}, {0.2, LabelField(g, 1, 2)}}, 10);
  CHECK(*extinction_time(shrink, 1) == doctest::Approx(0.2));
  const FlowTrace alive = trace_of({{0, disk(g, 0.3)}}, 10);
  CHECK_FALSE(first_extinction(alive));
}

TEST_CASE("monotone and confinement checks on hand-built traces") {
  const Grid g = Grid::cube(2, 16);
  FlowTrace t = trace_of({{0, disk(g, 0.3)}, {0.1, disk(g, 0.2)}}, 10);
  t.series.resize(3);
  t.series[0].per_phi = 3;
  t.series[1].per_phi = 2;
  t.series[2].per_phi = 2.5;
  for (Index k = 0; k < 3; ++k) t.series[std::size_t(k)].k = k;
  const MonotoneCheck m = check_monotone(t);
  CHECK(m.violations == 1);
  CHECK(m.worst_increase == doctest::Approx(0.5));
  CHECK(check_confinement(t, 0).outside_cells == 0);
  t.frames.push_back({2, 0.2, disk(g, 0.1, Eigen::Vector2d(0.4, 0.4))});
  CHECK(check_confinement(t, 0).outside_cells > 0);
}

TEST_CASE("submodularity examples") {
  std::mt19937_64 rng(5);
  const Grid g = Grid::cube(2, 12);
  std::bernoulli_distribution coin(0.4);
  Mask e(g.cells()), f(g.cells());
  for (Index c = 0; c < g.cells(); ++c) {
    e[c] = coin(rng);
    f[c] = !e[c] && coin(rng);
  }
  const Mask none = Mask::Constant(g.cells(), false);
  for (const Norm& n : {Norm::euclidean(2), Norm::diagonal(Eigen::Vector2d(1, 3))}) {
    const SubmodularityCheck same = check_submodularity_and_truncation(e, e, none, 0, n, g);
    CHECK(same.submodular);
    CHECK(std::abs(same.sub_excess) <= 1e-9);
    const SubmodularityCheck disjoint = check_submodularity_and_truncation(e, f, none, 0, n, g);
    CHECK(disjoint.submodular);
    CHECK(disjoint.sub_excess <= 1e-9);
  }
}

TEST_CASE("linear_fit recovers an exact line") {
  const auto [slope, intercept] = linear_fit({1, 2, 3, 4}, {-1, -3, -5, -7});
  CHECK(slope == doctest::Approx(-2));
  CHECK(intercept == doctest::Approx(1));
  CHECK_THROWS(linear_fit({1}, {1}));
}
