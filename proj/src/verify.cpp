#include "mmflow/verify.hpp"

#include "detail.hpp"

#include "mmflow/config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mmflow {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Pass: return "PASS";
    case Outcome::Audit: return "AUDIT";
    case Outcome::Fail: return "FAIL";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

int pick(std::mt19937_64& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

NormKind kind_of(int i) { return NormKind(i % 3); }

LabelField random_field(const Grid& g, int bounded, std::mt19937_64& rng) {
  Eigen::VectorXi lab(g.cells());
  for (Index c = 0; c < g.cells(); ++c) lab[c] = 1 + pick(rng, bounded + 1);
  return LabelField(g, bounded, std::move(lab));
}

Forcing random_forcing(const Grid& g, int phases, std::mt19937_64& rng, double amplitude) {
  Forcing h = Forcing::zero(g, phases);
  for (int q = 0; q + 1 < phases; ++q)
    for (Index c = 0; c < g.cells(); ++c) h.fields[std::size_t(q)].values[c] = amplitude * uniform(rng, -1, 1);
  h.support_radius = 2 * g.h() * g.extent(0) * g.dim();
  return h;
}

Mask random_mask(Index cells, double density, std::mt19937_64& rng) {
  Mask m(cells);
  for (Index c = 0; c < cells; ++c) m[c] = uniform(rng, 0, 1) < density;
  return m;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool close(double a, double b, double rel = 1e-12) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

}  // namespace

Norm random_norm(NormKind kind, int dim, std::mt19937_64& rng) {
  switch (kind) {
    case NormKind::Euclidean: return Norm::euclidean(dim);
    case NormKind::DiagonalWeighted: {
      Vec w(dim);
      for (int k = 0; k < dim; ++k) w[k] = uniform(rng, 0.5, 2.0);
      return Norm::diagonal(w);
    }
    case NormKind::Polyhedral: break;
  }
  while (true) {
    const int pairs = 2 + pick(rng, 3);
    Eigen::MatrixXd a(2 * pairs, dim);
    for (int j = 0; j < pairs; ++j) {
      Vec v(dim);
      for (int k = 0; k < dim; ++k) v[k] = uniform(rng, -1, 1);
      if (v.norm() < 0.2) v[0] += 1;
      v *= uniform(rng, 0.5, 2.0) / v.norm();
      a.row(2 * j) = v.transpose();
      a.row(2 * j + 1) = -v.transpose();
    }
    const Vec sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
    if (sv[dim - 1] > 1e-3 * sv[0]) return Norm::polyhedral(a);
  }
}

SuiteResult verify_two_phase_oracle(int trials, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  int agree = 0;
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    const Grid g = Grid::cube(2, t % 2 ? 4 : 3);
    const LabelField prev = random_field(g, 1, rng);
    const NormFamily phi({random_norm(kind_of(t), 2, rng), random_norm(kind_of(t / 3), 2, rng)},
                         FamilyRole::Anisotropies);
    const NormFamily psi({random_norm(kind_of(t / 9), 2, rng), random_norm(kind_of(t + 1), 2, rng)},
                         FamilyRole::Mobilities);
    const StepProblem p(prev, phi, psi, random_forcing(g, 2, rng, 3.0), uniform(rng, 1, 21));
    const double e = step_two_phase(p).report.total;
    const double o = oracle_minimize(p).energy;
    worst = std::max(worst, std::abs(e - o));
    agree += std::abs(e - o) <= 1e-6 ? 1 : 0;
  }
  SuiteResult r{"two-phase oracle equivalence", agree == trials ? Outcome::Pass : Outcome::Fail, "", 0};
  r.summary = fmt("%.0f/%.0f agree within 1e-6, worst |dE| = %.3g", agree, trials, worst);
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult verify_multiphase_oracle(int trials, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  int within = 0, above = 0;
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    const Grid g = Grid::cube(2, 3);
    const LabelField prev = random_field(g, 2, rng);
    std::vector<Norm> a, m;
    for (int q = 0; q < 3; ++q) {
      a.push_back(random_norm(kind_of(t + q), 2, rng));
      m.push_back(random_norm(kind_of(t / 3 + q), 2, rng));
    }
    const StepProblem p(prev, NormFamily(a, FamilyRole::Anisotropies), NormFamily(m, FamilyRole::Mobilities),
                        random_forcing(g, 3, rng, 3.0), uniform(rng, 1, 21));
    const double e = step_multiphase(p).report.total;
    const double o = oracle_minimize(p).energy;
    const double before = step_energy(prev, p).total;
    if (e > before + 1e-12 * (1 + std::abs(before))) ++above;
    const double rel = std::abs(e - o) / std::max(std::abs(o), 1e-12);
    worst = std::max(worst, rel);
    if (e <= o + 0.02 * std::abs(o) + 1e-9) ++within;
  }
  const bool ok = within >= int(std::ceil(0.95 * trials)) && above == 0;
  SuiteResult r{"multiphase near-optimality", ok ? Outcome::Pass : Outcome::Fail, "", 0};
  r.summary = fmt("%.0f/%.0f within 2%% of oracle, worst rel gap %.3g", within, trials, worst) +
              fmt(", %.0f above previous energy", above);
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult verify_comparison_oracle(int trials, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  int exact = 0, run = 0;
  for (int t = 0; t < trials; ++t) {
    const bool small = t % 2 == 0;
    const Grid g = Grid::cube(2, small ? 3 : 4);
    const int bounded = small ? 2 : 1;
    const LabelField prev = random_field(g, bounded, rng);
    const int phase = 1 + pick(rng, bounded + 1);
    const Mask in_phase = prev.mask(phase);
    if (!in_phase.any()) continue;
    Mask seed_mask = in_phase && random_mask(g.cells(), 0.7, rng);
    const Norm phi = random_norm(kind_of(t), 2, rng);
    const Norm psi = random_norm(kind_of(t / 3), 2, rng);
    const FlowModel model{NormFamily::uniform(phi, bounded + 1, FamilyRole::Anisotropies),
                          NormFamily::uniform(psi, bounded + 1, FamilyRole::Mobilities),
                          Forcing::zero(g, bounded + 1)};
    const double lambda = uniform(rng, 1, 21);
    const StepProblem pm(prev, model.anisotropies, model.mobilities, model.forcing, lambda);
    const bool ext = phase == prev.exterior();
    const StepProblem pt(seed_field(g, seed_mask, ext), NormFamily::uniform(phi, 2, FamilyRole::Anisotropies),
                         NormFamily::uniform(psi, 2, FamilyRole::Mobilities), Forcing::zero(g, 2), lambda);
    const LabelField a = oracle_minimize(pm).field;
    const LabelField e = oracle_minimize(pt).field;
    ++run;
    const Mask grown = e.mask(ext ? 2 : 1);
    exact += (grown && !a.mask(phase)).any() ? 0 : 1;
  }
  SuiteResult r{"comparison inclusion (oracle)", exact == run ? Outcome::Pass : Outcome::Fail, "", 0};
  r.summary = fmt("%.0f/%.0f instances with exact inclusion", exact, run);
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult verify_submodularity(int trials_per_kind, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  int violations = 0, trunc_violations = 0;
  double worst = -1e300;
  for (int kind = 0; kind < 3; ++kind) {
    for (int t = 0; t < trials_per_kind; ++t) {
      const Grid g = Grid::cube(2, 4 + pick(rng, 5));
      const Norm n = random_norm(kind_of(kind), 2, rng);
      const Mask e = random_mask(g.cells(), uniform(rng, 0.2, 0.8), rng);
      const Mask f = random_mask(g.cells(), uniform(rng, 0.2, 0.8), rng);
      const Vec center = Vec::Zero(2);
      const Mask box = rasterize_box(g, center, Vec::Constant(2, 0.3));
      const SubmodularityCheck s = check_submodularity_and_truncation(e, f, box, 4, n, g);
      worst = std::max(worst, s.sub_excess);
      violations += s.submodular ? 0 : 1;
      trunc_violations += s.truncation ? 0 : 1;
    }
  }
  SuiteResult r{"submodularity", violations == 0 ? Outcome::Pass : Outcome::Fail, "", 0};
  if (violations == 0 && trunc_violations > 0) r.outcome = Outcome::Audit;
  r.summary = fmt("%.0f violations over %.0f pairs, worst excess %.3g", violations, 3.0 * trials_per_kind, worst) +
              fmt(", %.0f convex-truncation audits", trunc_violations);
  r.seconds = seconds_since(t0);
  return r;
}

// Bit i set when integer offset v lies in the closed cone between stencil
// rays i and i + 1 (rays sorted by angle).
std::uint32_t stencil_cones(const std::vector<Coords>& rays, long vx, long vy) {
  std::uint32_t bits = 0;
  const std::size_t n = rays.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Coords& a = rays[i];
    const Coords& b = rays[(i + 1) % n];
    if (long(a[0]) * vy - long(a[1]) * vx >= 0 && vx * long(b[1]) - vy * long(b[0]) >= 0) bits |= 1u << i;
  }
  return bits;
}

// Forward-difference residual on a disk, at cells off the boundary band
// whose forward stencil sits in one linear piece of the graph distance:
// all three cells share the nearest source and a stencil cone around it.
// `any_piece` drops the cone condition.
double eikonal_residual(const Norm& psi, int n, bool any_piece = false) {
  const Grid g = Grid::cube(2, n);
  const double h = g.h();
  const double radius = 0.3;
  const Mask disk = rasterize_disk(g, Vec::Zero(2), radius);
  const SignedDistanceField sd = signed_dist(disk, psi, g);
  const std::vector<Index> src = detail::nearest_sources(disk, psi, g, Exterior::Outside);
  std::vector<Coords> rays = wide_stencil(2);
  std::sort(rays.begin(), rays.end(), [](const Coords& a, const Coords& b) {
    return std::atan2(double(a[1]), double(a[0])) < std::atan2(double(b[1]), double(b[0]));
  });
  double worst = 0;
  for (Index c = 0; c < g.cells(); ++c) {
    const Coords x = g.coords(c);
    if (x[0] + 1 >= n || x[1] + 1 >= n) continue;
    const double s = sd[c];
    const double r = g.center(c).norm();
    if (std::abs(s) < 2 * h || r < 0.1 || r > 0.45) continue;
    const Index e0 = c + g.stride(0), e1 = c + g.stride(1);
    const Index root = src[std::size_t(c)];
    if (root < 0 || src[std::size_t(e0)] != root || src[std::size_t(e1)] != root) continue;
    if (!any_piece) {
      const Coords o = g.coords(root);
      const long vx = x[0] - o[0], vy = x[1] - o[1];
      if ((stencil_cones(rays, vx, vy) & stencil_cones(rays, vx + 1, vy) & stencil_cones(rays, vx, vy + 1)) == 0)
        continue;
    }
    Vec grad(2);
    grad[0] = (sd[e0] - s) / h;
    grad[1] = (sd[e1] - s) / h;
    worst = std::max(worst, std::abs(psi.dual(grad) - 1));
  }
  return worst;
}

SuiteResult verify_distance(int trials, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  int mono_fail = 0, anti_fail = 0;
  for (int t = 0; t < trials; ++t) {
    const Grid g = Grid::cube(2, 5 + pick(rng, 8));
    const Norm psi = random_norm(kind_of(t), 2, rng);
    const Exterior ext = t % 4 == 3 ? Exterior::Inside : Exterior::Outside;
    const Mask a = random_mask(g.cells(), uniform(rng, 0.05, 0.5), rng);
    const Mask b = a || random_mask(g.cells(), uniform(rng, 0.0, 0.4), rng);
    const SignedDistanceField da = signed_dist(a, psi, g, ext);
    const SignedDistanceField db = signed_dist(b, psi, g, ext);
    if ((da.values.array() < db.values.array()).any()) ++mono_fail;
    const Mask ac = !a;
    const SignedDistanceField dc =
        signed_dist(ac, psi, g, ext == Exterior::Inside ? Exterior::Outside : Exterior::Inside);
    if (!(dc.values.array() == -da.values.array()).all()) ++anti_fail;
  }
  const double eik = eikonal_residual(Norm::euclidean(2), 128);
  const double eik_diag = eikonal_residual(Norm::diagonal(Eigen::Vector2d(1.0, 1.6)), 128);
  const bool ok = mono_fail == 0 && anti_fail == 0 && eik <= 0.08 && eik_diag <= 0.08;
  SuiteResult r{"distance transform", ok ? Outcome::Pass : Outcome::Fail, "", 0};
  r.summary = fmt("%.0f monotonicity and %.0f antisymmetry failures over %.0f pairs", mono_fail, anti_fail, trials) +
              fmt("; eikonal residual %.4f euclidean, %.4f diagonal (tol 0.08)", eik, eik_diag) +
              fmt("; across stencil cones %.4f, %.4f", eikonal_residual(Norm::euclidean(2), 128, true),
                  eikonal_residual(Norm::diagonal(Eigen::Vector2d(1.0, 1.6)), 128, true));
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult verify_constants() {
  const auto t0 = Clock::now();
  const double pi = std::numbers::pi;
  std::vector<std::string> bad;
  auto expect = [&](const char* what, double got, double want) {
    if (!close(got, want)) bad.push_back(std::string(what) + fmt(" = %.17g, expected %.17g", got, want));
  };
  DensityInputs in;
  in.c_phi = in.C_phi = 1;
  in.kappa = 0;
  in.phases = 3;
  in.dim = 2;
  in.lambda1 = 10;
  in.lambda2 = 0;
  in.alpha1 = 1;
  in.alpha2 = 0.75;
  in.r0 = 1;
  const DensityBounds b = density_bounds(in);
  expect("gamma", b.gamma, 1.0 / 6.0);
  expect("c", b.c_sharp, 2 * pi * (std::sqrt(2.0) - 1) / std::pow(2.0, 1.5) / 6.0);
  expect("upper volume", b.upper_vol_bound, 15.0 / 16.0);
  expect("upper perimeter", b.upper_per_bound, 3 * pi);
  expect("beta1", b.beta1, 1.0 / 20.0);
  expect("r_hat", b.r_hat, 1.0 / 20.0);
  expect("r_tilde", b.r_tilde, 0.5 * (1.0 / 20.0));

  SchemeInputs s;
  s.dim = 2;
  s.p = 4;
  s.lambda = 16;
  s.diam_psi = std::sqrt(2.0);
  s.bounded_phases = 1;
  const SchemeConstants k = scheme_constants(s);
  const double c4 = 2 * pi * (std::sqrt(2.0) - 1) / std::pow(2.0, 2.5) / 4;
  expect("C1", k.C1, 64);
  expect("C2", k.C2, 0);
  expect("C3", k.C3, 4 / (64 + std::sqrt(4096.0 + 8)));
  expect("C4", k.C4, c4);
  expect("C5", k.C5, 0);
  expect("C6", k.C6, 25 * pi / (2 * c4) + 0.5);
  expect("C3 radius", k.c3_radius_scale, k.C3 / 4);
  expect("Lambda1", k.lambda1, 16 * (std::sqrt(2.0) + 2));

  SuiteResult r{"constants spot-checks", bad.empty() ? Outcome::Pass : Outcome::Fail, "", 0};
  if (bad.empty()) {
    r.summary = "15 closed-form values match";
  } else {
    std::ostringstream out;
    for (const auto& m : bad) out << m << "; ";
    r.summary = out.str();
  }
  r.seconds = seconds_since(t0);
  return r;
}

std::vector<SuiteResult> run_verify_suites(const VerifyOptions& opt) {
  return {verify_two_phase_oracle(opt.two_phase_trials, opt.seed),
          verify_multiphase_oracle(opt.multiphase_trials, opt.seed + 1),
          verify_comparison_oracle(opt.comparison_trials, opt.seed + 2),
          verify_submodularity(opt.submodularity_trials, opt.seed + 3),
          verify_distance(opt.distance_trials, opt.seed + 4),
          verify_constants()};
}

int exit_code(const std::vector<SuiteResult>& results) {
  int code = 0;
  for (const auto& r : results) {
    if (r.outcome == Outcome::Fail) code = 2;
    if (r.outcome == Outcome::Audit) code = std::max(code, 1);
  }
  return code;
}

}  // namespace mmflow
