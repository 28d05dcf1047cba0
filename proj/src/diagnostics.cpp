#include "mmflow/diagnostics.hpp"

#include "detail.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace mmflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double beta(double c, int n, double omega, double alpha, double big_lambda) {
  if (big_lambda <= 0) return kInf;
  return std::pow(c * n * std::pow(omega, 1 - alpha) / (std::pow(2.0, 1 + alpha) * big_lambda),
                  1.0 / (n * alpha - n + 1));
}

double default_p(double p, int dim) { return p > 0 ? p : 2.0 * dim; }

double box_diameter(const Norm& psi, const Grid& g) {
  double best = 0;
  const int d = g.dim();
  for (int s = 0; s < (1 << d); ++s) {
    Vec v(d);
    for (int k = 0; k < d; ++k) v[k] = ((s >> k) & 1 ? -1.0 : 1.0) * g.h() * g.extent(k);
    best = std::max(best, psi(v));
  }
  return best;
}

struct Ball {
  std::vector<Coords> offsets;
};

Ball ball_offsets(const Grid& g, double r) {
  Ball b;
  const int m = int(std::floor(r / g.h())) + 1;
  const int mz = g.dim() == 3 ? m : 0;
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j)
      for (int k = -mz; k <= mz; ++k) {
        const double d2 = double(i) * i + double(j) * j + double(k) * k;
        if (d2 * g.h() * g.h() <= r * r * (1 + 1e-12)) b.offsets.push_back({i, j, k});
      }
  return b;
}

bool on_boundary(const LabelField& f, const Coords& x, int phase) {
  for (int k = 0; k < f.grid.dim(); ++k)
    for (int s : {-1, 1}) {
      Coords y = x;
      y[std::size_t(k)] += s;
      if (detail::label_at(f, y) != phase) return true;
    }
  return false;
}

// euclidean perimeter term of phase `phase` at (possibly exterior) cell y
double local_perimeter(const LabelField& f, const Coords& y, int phase) {
  const int here = detail::label_at(f, y) == phase ? 1 : 0;
  double s = 0;
  for (int k = 0; k < f.grid.dim(); ++k) {
    Coords z = y;
    z[std::size_t(k)] += 1;
    const double d = double((detail::label_at(f, z) == phase ? 1 : 0) - here);
    s += d * d;
  }
  return f.grid.facet_area() * std::sqrt(s);
}

DensityReport density_impl(const LabelField& field, const DensityBounds* bounds, const std::vector<double>& radii) {
  DensityReport rep;
  const Grid& g = field.grid;
  const int n = g.dim();
  for (double r : radii)
    if (r >= 2 * g.h() * (1 - 1e-12)) rep.radii.push_back(r);
  std::sort(rep.radii.begin(), rep.radii.end());
  if (bounds)
    rep.window_empty = rep.radii.empty() || rep.radii.front() > bounds->r_hat;
  else
    rep.window_empty = rep.radii.empty();
  std::vector<Ball> balls;
  for (double r : rep.radii) balls.push_back(ball_offsets(g, r));
  rep.theta = kInf;
  Index samples = 0, bad = 0;
  for (int phase = 1; phase <= field.bounded_phases; ++phase) {
    PhaseDensity pd;
    pd.phase = phase;
    pd.min_per = kInf;
    for (Index c = 0; c < g.cells(); ++c) {
      if (field.labels[c] != phase) continue;
      const Coords x = g.coords(c);
      if (!on_boundary(field, x, phase)) continue;
      ++pd.boundary_cells;
      for (std::size_t ri = 0; ri < balls.size(); ++ri) {
        const double r = rep.radii[ri];
        Index inside = 0;
        double per = 0;
        for (const Coords& o : balls[ri].offsets) {
          const Coords y{x[0] + o[0], x[1] + o[1], x[2] + o[2]};
          if (detail::label_at(field, y) == phase) ++inside;
          per += local_perimeter(field, y, phase);
        }
        const double vol = double(inside) / double(balls[ri].offsets.size());
        const double pr = per / std::pow(r, n - 1);
        pd.min_vol = std::min(pd.min_vol, vol);
        pd.max_vol = std::max(pd.max_vol, vol);
        pd.min_per = std::min(pd.min_per, pr);
        pd.max_per = std::max(pd.max_per, pr);
        ++pd.samples;
        ++samples;
        if (!bounds) continue;
        const double slack = 2 * g.h() / r;
        bool any = false;
        if (bounds->lower_bounds_hold && r <= bounds->r_tilde) {
          if (vol < bounds->lower_vol_bound * (1 - slack)) ++pd.lower_vol_violations, any = true;
          if (pr < bounds->c_sharp * (1 - slack)) ++pd.lower_per_violations, any = true;
        }
        if (r <= bounds->r_hat) {
          if (vol > bounds->upper_vol_bound * (1 + slack)) ++pd.upper_vol_violations, any = true;
          if (pr > bounds->upper_per_bound * (1 + slack)) ++pd.upper_per_violations, any = true;
        }
        bad += any ? 1 : 0;
      }
    }
    if (pd.samples == 0) pd.min_per = 0;
    if (pd.samples > 0) rep.theta = std::min(rep.theta, pd.min_per);
    rep.phases.push_back(pd);
  }
  if (!std::isfinite(rep.theta)) rep.theta = 0;
  rep.violation_fraction = samples > 0 ? double(bad) / double(samples) : 0;
  return rep;
}

}  // namespace

double unit_ball_volume(int dim) {
  if (dim == 2) return std::numbers::pi;
  if (dim == 3) return 4 * std::numbers::pi / 3;
  throw std::invalid_argument("unit ball volume: dim must be 2 or 3");
}

DensityBounds density_bounds(const DensityInputs& in) {
  if (in.phases < 2) throw std::invalid_argument("density bounds: need at least two phases");
  if (!(in.c_phi > 0) || in.C_phi < in.c_phi) throw std::invalid_argument("density bounds: need 0 < c_phi <= C_phi");
  const int n = in.dim;
  const double w = unit_ball_volume(n);
  const double m = in.phases - 1;
  const double c = in.c_phi, C = in.C_phi, k = in.kappa;
  DensityBounds b;
  b.inputs = in;
  b.gamma = (c - m * k / 2) / (2 * c + 2 * m * C - m * k);
  b.lower_bounds_hold = k < 2 * c / m;
  b.lower_vol_bound = b.lower_bounds_hold ? std::pow(b.gamma, n) : 0;
  b.c_sharp = b.lower_bounds_hold ? n * w * (std::pow(2.0, 1.0 / n) - 1) / std::pow(2.0, 1 + 1.0 / n) *
                                        std::pow(b.gamma, n - 1)
                                  : 0;
  b.upper_vol_bound = 1 - std::pow(c / (2 * (c + C)), n);
  b.upper_per_bound = (C / c + 0.5) * n * w;
  b.beta1 = beta(c, n, w, in.alpha1, in.lambda1);
  b.beta2 = beta(c, n, w, in.alpha2, in.lambda2);
  b.r_hat = std::min({in.r0, b.beta1, b.beta2});
  if (b.lower_bounds_hold) {
    const double q = c / m - k / 2;
    const double t1 = std::isfinite(b.beta1) ? std::pow(q, 1.0 / (n * in.alpha1 - n + 1)) * b.beta1 : kInf;
    const double t2 = std::isfinite(b.beta2) ? std::pow(q, 1.0 / (n * in.alpha2 - n + 1)) * b.beta2 : kInf;
    b.r_tilde = std::min({in.r0, t1, t2});
  }
  return b;
}

SchemeConstants scheme_constants(const SchemeInputs& in) {
  const int n = in.dim;
  if (!(in.p > n)) throw std::invalid_argument("scheme constants: need p > dim");
  const double w = unit_ball_volume(n);
  const double c = in.c_phi, C = in.C_phi, cp = in.c_psi, Cp = in.C_psi;
  const double p = in.p;
  SchemeConstants k;
  k.C1 = 8 * Cp * std::sqrt(std::pow(4 * C, n + 1) * n / (2 * cp * std::pow(c, n)));
  const double hq = std::pow(in.h_integral / w, 2 / (p - n));
  k.C2 = std::pow(n * c, 2 * p / (n - p)) * std::pow(k.C1 / (2 * Cp), 2) * hq;
  k.C3 = 2 * n * c / (k.C1 + std::sqrt(k.C1 * k.C1 + 4 * n * c * Cp));
  k.C4 = n * w * (std::pow(2.0, 1.0 / n) - 1) / std::pow(2.0, n + 1.0 / n) * std::pow(c / (4 * C), n - 1);
  k.C5 = std::max(k.C2, k.C3 * k.C3 * std::pow(n * c / 2, 2 * p / (n - p)) * hq);
  k.C6 = std::pow(5.0, n) * w / (2 * k.C4 * c) + 1 / (2 * cp);
  k.c3_radius_scale = k.C3 / std::sqrt(in.lambda);
  k.lambda1 = in.lambda * (in.diam_psi + 2);
  k.lambda2 = std::pow(double(in.bounded_phases), 1 / p) * in.h_lp_max;
  return k;
}

SchemeInputs scheme_inputs(const FlowModel& model, const Grid& grid, double lambda, double p) {
  SchemeInputs in;
  in.dim = grid.dim();
  in.p = default_p(p, in.dim);
  in.lambda = lambda;
  in.bounded_phases = model.anisotropies.size() - 1;
  const FamilyBounds phi = family_bounds(model.anisotropies, 4096);
  const FamilyBounds psi = family_bounds(model.mobilities, 4096);
  in.c_phi = phi.c_lower;
  in.C_phi = phi.c_upper;
  in.c_psi = psi.c_lower;
  in.C_psi = psi.c_upper;
  for (const Norm& m : model.mobilities.members) in.diam_psi = std::max(in.diam_psi, box_diameter(m, grid));
  if (!model.forcing.fields.empty()) {
    const int ext = int(model.forcing.fields.size());
    for (int j = 1; j < ext; ++j) {
      double integral = 0;
      for (Index c = 0; c < grid.cells(); ++c) integral += std::pow(std::abs(model.forcing.relative(j, c)), in.p);
      integral *= grid.cell_volume();
      in.h_integral = std::max(in.h_integral, integral);
      in.h_lp_max = std::max(in.h_lp_max, std::pow(integral, 1 / in.p));
    }
  }
  return in;
}

DensityInputs density_inputs(const FlowModel& model, const Grid& grid, double lambda, double p) {
  const SchemeInputs s = scheme_inputs(model, grid, lambda, p);
  const SchemeConstants k = scheme_constants(s);
  DensityInputs in;
  in.c_phi = s.c_phi;
  in.C_phi = s.C_phi;
  in.kappa = family_bounds(model.anisotropies, 4096).kappa;
  in.lambda1 = k.lambda1;
  in.lambda2 = k.lambda2;
  in.alpha1 = 1;
  in.alpha2 = 1 - 1 / s.p;
  in.r0 = 1;
  in.dim = s.dim;
  in.phases = model.anisotropies.size();
  return in;
}

DensityReport density_report(const LabelField& field, const DensityBounds& bounds, const std::vector<double>& radii) {
  return density_impl(field, &bounds, radii);
}

DensityReport density_report(const LabelField& field, const std::vector<double>& radii) {
  return density_impl(field, nullptr, radii);
}

VolumeDistance check_volume_distance(const Mask& a, const Mask& b, const Grid& grid, double theta, double r0,
                                     double ell) {
  if (!(theta > 0 && r0 > 0 && ell > 0)) throw std::invalid_argument("volume-distance: theta, r0, ell must be positive");
  if (a.size() != grid.cells() || b.size() != grid.cells())
    throw std::invalid_argument("volume-distance: mask size does not match grid");
  const int n = grid.dim();
  const Norm euclid = Norm::euclidean(n);
  VolumeDistance out;
  const Mask diff = a != b;
  out.lhs = double(diff.count()) * grid.cell_volume();
  const double per = perimeter_phi(a.cast<double>(), euclid, grid);
  double dist_sum = 0;
  if (diff.any()) {
    const SignedDistanceField sd = signed_dist(a, euclid, grid);
    for (Index c = 0; c < grid.cells(); ++c)
      if (diff[c]) dist_sum += std::abs(sd[c]);
    dist_sum *= grid.cell_volume();
  }
  out.rhs = std::pow(5.0, n) * unit_ball_volume(n) / theta * std::max(1.0, std::pow(ell / r0, n - 1)) * per * ell +
            dist_sum / ell;
  out.holds = out.lhs <= out.rhs;

  std::vector<double> radii;
  for (double r = 2 * grid.h(); r <= r0 * (1 + 1e-12); r *= 2) radii.push_back(r);
  Eigen::VectorXi labels(grid.cells());
  for (Index c = 0; c < grid.cells(); ++c) labels[c] = a[c] ? 1 : 2;
  const DensityReport rep = density_report(LabelField(grid, 1, std::move(labels)), radii);
  out.hypothesis_holds = rep.radii.empty() || rep.phases.front().samples == 0 || rep.theta >= theta;
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> holder_pairs(const FlowTrace& trace, double t_max) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < trace.frames.size(); ++a)
    for (std::size_t b = a + 1; b < trace.frames.size(); ++b) {
      const double ta = trace.frames[a].time, tb = trace.frames[b].time;
      if (ta > 0 && tb <= t_max && tb > ta && tb - ta < 1) out.emplace_back(a, b);
    }
  return out;
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear fit: need at least two points");
  Eigen::MatrixXd A(Eigen::Index(x.size()), 2);
  Eigen::VectorXd b(Eigen::Index(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    A(Eigen::Index(i), 0) = x[i];
    A(Eigen::Index(i), 1) = 1;
    b[Eigen::Index(i)] = y[i];
  }
  const Eigen::Vector2d s = A.colPivHouseholderQr().solve(b);
  return {s[0], s[1]};
}

HolderFit holder_fit(const FlowTrace& trace, const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double c6,
                     double initial_perimeter) {
  HolderFit fit;
  fit.c6 = c6;
  std::vector<double> x, y;
  for (const auto& [a, b] : pairs) {
    const Frame& fa = trace.frames.at(a);
    const Frame& fb = trace.frames.at(b);
    const double dt = std::abs(fb.time - fa.time);
    if (!(dt > 0)) continue;
    const double d = sym_diff_volume(fa.field, fb.field).total;
    if (c6 > 0) {
      const double bound = c6 * initial_perimeter * std::sqrt(dt);
      const double ratio = bound > 0 ? d / bound : (d > 0 ? kInf : 0);
      fit.worst_bound_ratio = std::max(fit.worst_bound_ratio, ratio);
      fit.bound_holds = fit.bound_holds && d <= bound;
    }
    if (d > 0) {
      x.push_back(std::log(dt));
      y.push_back(std::log(d));
    }
  }
  fit.pairs = Index(x.size());
  std::vector<double> xs = x;
  std::sort(xs.begin(), xs.end());
  if (x.size() < 2 || xs.front() == xs.back()) {
    fit.stationary = x.empty();
    return fit;
  }
  const auto [slope, intercept] = linear_fit(x, y);
  fit.exponent = slope;
  fit.constant = std::exp(intercept);
  return fit;
}

DisplacementFit displacement_scaling(const std::vector<FlowTrace>& traces, double c1) {
  DisplacementFit fit;
  std::vector<double> x, y;
  for (const FlowTrace& t : traces) {
    double m = 0;
    for (const StepRecord& r : t.series) m = std::max(m, r.displacement);
    const double lambda = t.params.lambda;
    fit.lambdas.push_back(lambda);
    fit.maxima.push_back(m);
    fit.within_c1.push_back(c1 <= 0 || m <= c1 / std::sqrt(lambda));
    fit.used.push_back(m > 0);
    if (m > 0) {
      x.push_back(std::log(lambda));
      y.push_back(std::log(m));
    }
  }
  if (x.size() >= 2) std::tie(fit.slope, fit.intercept) = linear_fit(x, y);
  return fit;
}

std::optional<double> extinction_time(const FlowTrace& trace, int phase) {
  for (const Frame& f : trace.frames)
    if (f.field.count(phase) == 0) return f.time;
  return std::nullopt;
}

std::optional<double> first_extinction(const FlowTrace& trace) {
  std::optional<double> best;
  if (trace.frames.empty()) return best;
  for (int i = 1; i <= trace.frames.front().field.bounded_phases; ++i) {
    const auto t = extinction_time(trace, i);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

InclusionSeries check_inclusion_series(const ComparisonResult& run, const Norm& mobility) {
  InclusionSeries out;
  for (const ComparisonStep& s : run.series) {
    const double frac = s.band > 0 ? double(s.violations) / double(s.band) : (s.violations > 0 ? 1.0 : 0.0);
    out.fractions.push_back(frac);
    out.max_fraction = std::max(out.max_fraction, frac);
    out.total_violations += s.violations;
    if (s.seed_cells > 0 && s.phase_cells == 0) ++out.persistence_failures;
  }
  const int i = run.phase;
  for (const Frame& fm : run.multiphase.frames) {
    const Frame* ft = nullptr;
    for (const Frame& f : run.two_phase.frames)
      if (f.step == fm.step) ft = &f;
    if (!ft) continue;
    const LabelField& multi = fm.field;
    const bool ext = i == multi.exterior();
    const Mask e_mask = ft->field.mask(ext ? 2 : 1);
    const Mask a_mask = multi.mask(i);
    if ((e_mask && !a_mask).any()) continue;
    const SignedDistanceField e =
        signed_dist(e_mask, mobility, multi.grid, ext ? Exterior::Inside : Exterior::Outside);
    const SignedDistanceField gi = phase_signed_dist(multi, i, mobility);
    for (int j = 1; j <= multi.phases(); ++j) {
      if (j == i) continue;
      const SignedDistanceField gj = phase_signed_dist(multi, j, mobility);
      for (Index c = 0; c < multi.cells(); ++c) {
        const double ev = e[c], a = gi[c], b = gj[c];
        if (!std::isfinite(ev) || !std::isfinite(a) || !std::isfinite(b)) continue;
        ++out.sign_checks;
        if ((ev - a) + (ev + b) < 0) ++out.sign_failures;
      }
    }
  }
  return out;
}

SubmodularityCheck check_submodularity_and_truncation(const Mask& e, const Mask& f, const Mask& c, int facets,
                                                      const Norm& norm, const Grid& grid) {
  auto per = [&](const Mask& m) { return perimeter_phi(m.cast<double>(), norm, grid); };
  SubmodularityCheck out;
  const double lhs = per(e && f) + per(e || f);
  const double rhs = per(e) + per(f);
  out.sub_excess = lhs - rhs;
  out.submodular = out.sub_excess <= 1e-9 * std::max(1.0, rhs);
  out.slack = 4 * norm.sphere_max() * grid.h() * facets;
  out.trunc_excess = per(e && c) - per(e);
  out.truncation = out.trunc_excess <= out.slack;
  return out;
}

MonotoneCheck check_monotone(const FlowTrace& trace, double tol) {
  MonotoneCheck out;
  for (std::size_t k = 1; k < trace.series.size(); ++k) {
    const StepRecord& r = trace.series[k];
    if (!r.report.accepted) continue;
    ++out.steps;
    const double before = trace.series[k - 1].per_phi + trace.series[k - 1].force;
    const double after = r.per_phi + r.force;
    const double inc = after - before;
    if (inc > tol * std::max(1.0, std::abs(before))) ++out.violations;
    out.worst_increase = std::max(out.worst_increase, inc);
  }
  return out;
}

ConfinementCheck check_confinement(const FlowTrace& trace, double ball_radius) {
  ConfinementCheck out;
  if (trace.frames.empty()) return out;
  const LabelField& first = trace.frames.front().field;
  const Mask hull = convex_hull_mask(first, 2 * first.grid.h(), ball_radius);
  for (const Frame& f : trace.frames) {
    ++out.frames;
    for (Index c = 0; c < f.field.cells(); ++c)
      if (f.field.labels[c] <= f.field.bounded_phases && !hull[c]) ++out.outside_cells;
  }
  return out;
}

}  // namespace mmflow
