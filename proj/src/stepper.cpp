#include "mmflow/stepper.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "relaxation.hpp"

namespace mmflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Perimeter term of the extended cell x, summed over the phases present.
double local_term(const LabelField& f, const Coords& x, const NormFamily& phi) {
  const int d = f.grid.dim();
  std::array<int, 4> local{};
  detail::local_labels(f, x, local);
  double total = 0;
  Vec delta(d);
  for (int s = 0; s <= d; ++s) {
    const int p = local[std::size_t(s)];
    bool seen = false;
    for (int t = 0; t < s; ++t) seen = seen || local[std::size_t(t)] == p;
    if (seen) continue;
    const double b0 = local[0] == p ? 1 : 0;
    for (int k = 0; k < d; ++k) delta[k] = (local[std::size_t(k + 1)] == p ? 1 : 0) - b0;
    if (!delta.isZero(0)) total += phi[p - 1](delta);
  }
  return total;
}

// Sum of the terms touched by relabelling cell c: those at c and at c - e_k.
double touched_terms(const LabelField& f, const Coords& c, const NormFamily& phi) {
  double total = local_term(f, c, phi);
  for (int k = 0; k < f.grid.dim(); ++k) {
    Coords y = c;
    --y[std::size_t(k)];
    total += local_term(f, y, phi);
  }
  return total;
}

double cell_dissipation(const std::vector<SignedDistanceField>& dist, int prev_label, int label, Index c) {
  if (label == prev_label) return 0;
  return std::abs(dist[std::size_t(label - 1)][c]) + std::abs(dist[std::size_t(prev_label - 1)][c]);
}

// Level t of {u >= t} with the lowest energy: 1/2 unless another level of
// the (approximate) relaxed minimiser does strictly better.
double best_level(const detail::RelaxedProblem& rp, const Eigen::VectorXd& u) {
  std::vector<double> levels;
  for (Index i = 0; i < u.size(); ++i)
    if (u[i] > 0 && u[i] < 1) levels.push_back(u[i]);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  constexpr std::size_t kMaxLevels = 64;
  std::vector<double> candidates{0.5};
  if (levels.size() <= kMaxLevels) {
    candidates.insert(candidates.end(), levels.begin(), levels.end());
  } else {
    for (std::size_t j = 0; j < kMaxLevels; ++j) candidates.push_back(levels[j * levels.size() / kMaxLevels]);
  }
  candidates.push_back(1.0);
  double best = 0.5;
  double best_energy = kInf;
  Eigen::MatrixXd chi(u.size(), 1);
  for (double t : candidates) {
    for (Index i = 0; i < u.size(); ++i) chi(i, 0) = u[i] >= t ? 1 : 0;
    const double e = detail::relaxed_objective(rp, chi);
    if (e < best_energy) best_energy = e, best = t;
  }
  return best;
}

StepResult identity_step(const StepProblem& p, const std::vector<SignedDistanceField>& dist) {
  StepResult r{p.prev, step_energy(p.prev, p, dist)};
  r.report.accepted = true;
  return r;
}

// Energy guard: keep the candidate only if it does not raise the energy.
StepResult guard(const StepProblem& p, LabelField candidate, const std::vector<SignedDistanceField>& dist,
                 const StepReport& solver) {
  StepReport prev_report = step_energy(p.prev, p, dist);
  StepReport cand = step_energy(candidate, p, dist);
  auto copy_solver = [&](StepReport& r) {
    r.iterations = solver.iterations;
    r.duality_gap = solver.duality_gap;
    r.converged = solver.converged;
    r.repaired = solver.repaired;
    r.repair_limit = solver.repair_limit;
  };
  if (cand.total <= prev_report.total) {
    copy_solver(cand);
    cand.accepted = true;
    return {std::move(candidate), cand};
  }
  copy_solver(prev_report);
  prev_report.accepted = false;
  return {p.prev, prev_report};
}

}  // namespace

void StepProblem::validate() const {
  prev.validate();
  if (!(lambda >= 1) || !std::isfinite(lambda)) throw std::invalid_argument("step problem: lambda must be finite and >= 1");
  if (anisotropies.size() != prev.phases()) throw std::invalid_argument("step problem: anisotropy family length must equal N+1");
  if (mobilities.size() != prev.phases()) throw std::invalid_argument("step problem: mobility family length must equal N+1");
  if (anisotropies.dim() != prev.grid.dim() || mobilities.dim() != prev.grid.dim())
    throw std::invalid_argument("step problem: norm dimension does not match grid");
  forcing.validate(prev.grid, prev.phases());
}

std::vector<bool> frozen_phases(const std::vector<SignedDistanceField>& dist) {
  std::vector<bool> out;
  for (const auto& d : dist) out.push_back(d.empty_boundary);
  return out;
}

StepReport step_energy(const LabelField& candidate, const StepProblem& p, const std::vector<SignedDistanceField>& dist) {
  require_same_grid(candidate.grid, p.prev.grid, "step_energy");
  if (candidate.bounded_phases != p.prev.bounded_phases) throw std::invalid_argument("step_energy: phase count mismatch");
  StepReport r;
  r.energy_perimeter = per_phi(candidate, p.anisotropies).total;
  r.energy_force = force_integral(candidate, p.forcing);
  bool infinite = false;
  for (Index c = 0; c < candidate.cells() && !infinite; ++c) {
    const int a = candidate.labels[c], b = p.prev.labels[c];
    infinite = a != b && (dist[std::size_t(a - 1)].empty_boundary || dist[std::size_t(b - 1)].empty_boundary);
  }
  r.energy_dissipation = infinite ? kInf : dissipation(p.prev, candidate, dist);
  r.total = r.energy_perimeter + r.energy_force + p.lambda * r.energy_dissipation;
  return r;
}

StepReport step_energy(const LabelField& candidate, const StepProblem& p) {
  return step_energy(candidate, p, phase_distances(p.prev, p.mobilities));
}

StepResult step_two_phase(const StepProblem& p, const SolverSettings& settings) {
  p.validate();
  if (p.prev.bounded_phases != 1) throw std::invalid_argument("step_two_phase: requires N = 1");
  const auto dist = phase_distances(p.prev, p.mobilities);
  if (dist[0].empty_boundary || dist[1].empty_boundary) return identity_step(p, dist);

  const Grid& g = p.prev.grid;
  const double vol = g.cell_volume();
  detail::RelaxedProblem rp;
  rp.grid = g;
  rp.columns = 1;
  if (p.anisotropies[0] == p.anisotropies[1]) {
    rp.groups.push_back({0, 2 * closure_covectors(p.anisotropies[0]), 0.0});
  } else {
    rp.groups.push_back({0, closure_covectors(p.anisotropies[0]), 0.0});
    rp.groups.push_back({0, closure_covectors(p.anisotropies[1]), 0.0});
  }
  rp.cost.resize(g.cells(), 1);
  rp.start.resize(g.cells(), 1);
  double constant = 0;
  for (Index c = 0; c < g.cells(); ++c) {
    const double s1 = dist[0][c], s2 = dist[1][c];
    rp.cost(c, 0) = vol * (p.lambda * (s1 - s2) + p.forcing.relative(1, c));
    const bool in = p.prev.labels[c] == 1;
    rp.start(c, 0) = in ? 1 : 0;
    if (in) constant += s2 - s1;
  }
  rp.constant = p.lambda * vol * constant;
  rp.constraint = detail::Constraint::Box;
  rp.free_column = {true};
  rp.fixed_cell = Mask::Constant(g.cells(), false);

  rp.priority = dist[0].values.cwiseAbs();
  rp.band = p.mobilities[0].sphere_max() * std::max(4 * g.h(), 1 / std::sqrt(p.lambda));

  const auto res = detail::solve_relaxation(rp, settings.effective_gap_tol(g), settings.max_iters, settings.check_every);
  const double level = best_level(rp, res.u.col(0));
  Eigen::VectorXi labels(g.cells());
  for (Index c = 0; c < g.cells(); ++c) labels[c] = res.u(c, 0) >= level ? 1 : 2;

  StepReport solver;
  solver.iterations = res.iterations;
  solver.duality_gap = res.gap;
  solver.converged = res.converged;
  return guard(p, LabelField(g, 1, std::move(labels)), dist, solver);
}

StepResult step_multiphase(const StepProblem& p, const SolverSettings& settings) {
  p.validate();
  const auto dist = phase_distances(p.prev, p.mobilities);
  const auto frozen = frozen_phases(dist);
  const int phases = p.prev.phases();
  std::vector<int> movable;
  for (int q = 1; q <= phases; ++q)
    if (!frozen[std::size_t(q - 1)]) movable.push_back(q);
  if (movable.size() < 2) return identity_step(p, dist);

  const Grid& g = p.prev.grid;
  const double vol = g.cell_volume();
  detail::RelaxedProblem rp;
  rp.grid = g;
  rp.columns = phases;
  for (int q = 1; q <= phases; ++q) rp.groups.push_back({q - 1, closure_covectors(p.anisotropies[q - 1]), q == phases ? 1.0 : 0.0});
  rp.cost = Eigen::MatrixXd::Zero(g.cells(), phases);
  rp.start = Eigen::MatrixXd::Zero(g.cells(), phases);
  rp.fixed_cell = Mask::Constant(g.cells(), false);
  double constant = 0;
  for (Index c = 0; c < g.cells(); ++c) {
    const int l = p.prev.labels[c];
    rp.start(c, l - 1) = 1;
    rp.fixed_cell[c] = frozen[std::size_t(l - 1)];
    for (int q : movable) rp.cost(c, q - 1) = vol * (p.lambda * dist[std::size_t(q - 1)][c] + p.forcing.relative(q, c));
    if (!frozen[std::size_t(l - 1)]) constant -= dist[std::size_t(l - 1)][c];
  }
  rp.constant = p.lambda * vol * constant;
  rp.constraint = detail::Constraint::Simplex;
  for (int q = 1; q <= phases; ++q) rp.free_column.push_back(!frozen[std::size_t(q - 1)]);

  const auto res = detail::solve_relaxation(rp, settings.effective_gap_tol(g), settings.max_iters, settings.check_every);

  LabelField cur = p.prev;
  for (Index c = 0; c < g.cells(); ++c) {
    if (rp.fixed_cell[c]) continue;
    int best = movable.front();
    for (int q : movable)
      if (res.u(c, q - 1) > res.u(c, best - 1)) best = q;
    cur.labels[c] = best;
  }

  // single-cell repair sweeps on the exact energy
  StepReport solver;
  solver.iterations = res.iterations;
  solver.duality_gap = res.gap;
  solver.converged = res.converged;
  const double facet = g.facet_area();
  const double eps = 1e-12 * (1 + std::abs(step_energy(p.prev, p, dist).total));
  const Index limit = 10 * g.cells();
  for (Index sweep = 0;; ++sweep) {
    if (sweep >= limit) {
      solver.repair_limit = true;
      break;
    }
    bool changed = false;
    for (Index c = 0; c < g.cells(); ++c) {
      if (rp.fixed_cell[c]) continue;
      const Coords x = g.coords(c);
      const int l0 = cur.labels[c];
      const int pl = p.prev.labels[c];
      auto local_energy = [&](int l) {
        return facet * touched_terms(cur, x, p.anisotropies) +
               vol * (p.lambda * cell_dissipation(dist, pl, l, c) + p.forcing.relative(l, c));
      };
      const double base = local_energy(l0);
      int best = l0;
      double best_delta = -eps;
      for (int q : movable) {
        if (q == l0) continue;
        cur.labels[c] = q;
        const double delta = local_energy(q) - base;
        if (delta < best_delta) best_delta = delta, best = q;
      }
      cur.labels[c] = best;
      if (best != l0) changed = solver.repaired = true;
    }
    if (!changed) break;
  }
  return guard(p, std::move(cur), dist, solver);
}

StepResult step(const StepProblem& p, const SolverSettings& settings) {
  return p.prev.bounded_phases == 1 ? step_two_phase(p, settings) : step_multiphase(p, settings);
}

OracleResult oracle_minimize(const StepProblem& p, int max_cells) {
  p.validate();
  if (max_cells > 20) throw std::invalid_argument("oracle_minimize: max_cells must be <= 20");
  const auto dist = phase_distances(p.prev, p.mobilities);
  const auto frozen = frozen_phases(dist);
  std::vector<int> allowed;
  for (int q = 1; q <= p.prev.phases(); ++q)
    if (!frozen[std::size_t(q - 1)]) allowed.push_back(q);
  std::vector<Index> active;
  for (Index c = 0; c < p.prev.cells(); ++c)
    if (!frozen[std::size_t(p.prev.labels[c] - 1)]) active.push_back(c);
  if (int(active.size()) > max_cells)
    throw TooLarge("oracle_minimize: " + std::to_string(active.size()) + " active cells exceed the cap of " +
                   std::to_string(max_cells));

  LabelField cur = p.prev;
  OracleResult best{p.prev, step_energy(p.prev, p, dist).total};
  if (active.empty() || allowed.size() < 2) return best;

  std::vector<std::size_t> digit(active.size(), 0);
  for (Index c : active) cur.labels[c] = allowed.front();
  best.energy = kInf;
  // odometer with the last active cell changing fastest: lexicographic order
  while (true) {
    const double e = step_energy(cur, p, dist).total;
    if (e < best.energy) {
      best.energy = e;
      best.field = cur;
    }
    std::size_t k = active.size();
    while (k > 0) {
      --k;
      if (++digit[k] < allowed.size()) {
        cur.labels[active[k]] = allowed[digit[k]];
        break;
      }
      digit[k] = 0;
      cur.labels[active[k]] = allowed.front();
      if (k == 0) return best;
    }
  }
}

}  // namespace mmflow
