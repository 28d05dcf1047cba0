#include "mmflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace mmflow {

void FlowParams::validate() const {
  if (!(lambda >= 1) || !std::isfinite(lambda)) throw std::invalid_argument("flow: lambda must be finite and >= 1");
  if (!(horizon >= 0) || !std::isfinite(horizon)) throw std::invalid_argument("flow: horizon T must be finite and >= 0");
  for (std::size_t i = 0; i < checkpoint_times.size(); ++i) {
    const double t = checkpoint_times[i];
    if (!(t >= 0 && t <= horizon)) throw std::invalid_argument("flow: checkpoint times must lie in [0, T]");
    if (i > 0 && t < checkpoint_times[i - 1]) throw std::invalid_argument("flow: checkpoint times must be sorted");
  }
  if (solver.max_iters < 1 || solver.check_every < 1) throw std::invalid_argument("flow: solver caps must be positive");
}

Index FlowParams::step_index(double t) const {
  const double x = lambda * t;
  return Index(std::floor(x + 1e-9 * std::max(1.0, std::abs(x))));
}

namespace {

double max_displacement(const LabelField& prev, const LabelField& next, const std::vector<SignedDistanceField>& dist) {
  double out = 0;
  for (Index c = 0; c < prev.cells(); ++c) {
    const int a = next.labels[c], b = prev.labels[c];
    if (a == b) continue;
    out = std::max(out, std::abs(dist[std::size_t(a - 1)][c]) + std::abs(dist[std::size_t(b - 1)][c]));
  }
  return out;
}

StepRecord initial_record(const LabelField& f, const FlowModel& m) {
  StepRecord r;
  r.per_phi = per_phi(f, m.anisotropies).total;
  r.force = force_integral(f, m.forcing);
  r.report.energy_perimeter = r.per_phi;
  r.report.energy_force = r.force;
  r.report.total = r.per_phi + r.force;
  return r;
}

// Advances one step and fills the record; returns the new field.
LabelField advance(const LabelField& cur, const FlowModel& m, const FlowParams& params, Index k, StepRecord& rec) {
  const StepProblem prob(cur, m.anisotropies, m.mobilities, m.forcing, params.lambda);
  StepResult r = step(prob, params.solver);
  rec = StepRecord{};
  rec.k = k;
  rec.report = r.report;
  rec.per_phi = r.report.energy_perimeter;
  rec.force = r.report.energy_force;
  rec.dissipation = r.report.energy_dissipation;
  if (!(r.field == cur)) {
    rec.sym_diff = sym_diff_volume(cur, r.field).total;
    rec.displacement = max_displacement(cur, r.field, phase_distances(cur, m.mobilities));
  }
  return std::move(r.field);
}

struct Recorder {
  const FlowParams& params;
  FlowTrace& trace;
  std::vector<Index> wanted;

  Recorder(const FlowParams& p, FlowTrace& t) : params(p), trace(t) {
    for (double time : p.checkpoint_times) wanted.push_back(p.step_index(time));
  }

  void keep(Index k, const LabelField& f) {
    const bool is_checkpoint = std::find(wanted.begin(), wanted.end(), k) != wanted.end();
    if (k == 0 || params.every_step || is_checkpoint) trace.frames.push_back({k, double(k) / params.lambda, f});
  }

  void finish() {
    for (std::size_t i = 0; i < wanted.size(); ++i) {
      const Index k = std::min(wanted[i], trace.steps());
      Index idx = 0;
      for (std::size_t j = 0; j < trace.frames.size(); ++j)
        if (trace.frames[j].step <= k) idx = Index(j);
      trace.checkpoints.emplace_back(params.checkpoint_times[i], idx);
    }
  }
};

}  // namespace

FlowTrace run_flow(const LabelField& initial, const FlowModel& model, const FlowParams& params, const StepObserver& observer) {
  params.validate();
  FlowTrace trace;
  trace.params = params;
  Recorder rec(params, trace);
  LabelField cur = initial;
  trace.series.push_back(initial_record(cur, model));
  rec.keep(0, cur);
  const Index steps = params.step_index(params.horizon);
  for (Index k = 1; k <= steps; ++k) {
    StepRecord r;
    cur = advance(cur, model, params, k, r);
    trace.series.push_back(r);
    rec.keep(k, cur);
    if (observer) observer(r, cur);
  }
  rec.finish();
  return trace;
}

GmmResult extract_gmm(const LabelField& initial, const FlowModel& model, const std::vector<double>& lambdas,
                      const FlowParams& base, double threshold, int threads) {
  if (lambdas.empty()) throw std::invalid_argument("gmm: need at least one lambda");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (lambdas[i] < lambdas[i - 1]) throw std::invalid_argument("gmm: lambdas must be non-decreasing");
  GmmResult out;
  out.lambdas = lambdas;
  out.threshold = threshold;
  out.traces.resize(lambdas.size());
  auto run_one = [&](std::size_t i) {
    FlowParams p = base;
    p.lambda = lambdas[i];
    out.traces[i] = run_flow(initial, model, p);
  };
  const std::size_t workers = std::size_t(std::max(1, threads));
  for (std::size_t start = 0; start < lambdas.size(); start += workers) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = start; i < std::min(lambdas.size(), start + workers); ++i)
      jobs.push_back(std::async(workers == 1 ? std::launch::deferred : std::launch::async, run_one, i));
    for (auto& j : jobs) j.get();
  }
  const std::size_t n = lambdas.size();
  out.converged = n >= 2;
  for (std::size_t t = 0; t < base.checkpoint_times.size(); ++t) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double d = sym_diff_volume(out.traces[a].at_checkpoint(t), out.traces[b].at_checkpoint(t)).total;
        m(Eigen::Index(a), Eigen::Index(b)) = m(Eigen::Index(b), Eigen::Index(a)) = d;
      }
    for (std::size_t a = 0; a + 1 < n; ++a)
      out.converged = out.converged && m(Eigen::Index(a), Eigen::Index(a + 1)) <= threshold;
    out.cauchy.push_back(std::move(m));
  }
  return out;
}

LabelField seed_field(const Grid& grid, const Mask& seed, bool seed_is_exterior) {
  if (seed.size() != grid.cells()) throw std::invalid_argument("seed: mask size does not match grid");
  Eigen::VectorXi labels(grid.cells());
  for (Index c = 0; c < grid.cells(); ++c) labels[c] = (seed[c] != seed_is_exterior) ? 1 : 2;
  return LabelField(grid, 1, std::move(labels));
}

void validate_comparison(const LabelField& initial, const Mask& seed, int phase, const FlowModel& model) {
  if (phase < 1 || phase > initial.phases()) throw std::invalid_argument("comparison: phase index out of range");
  if (seed.size() != initial.cells()) throw std::invalid_argument("comparison: seed mask size does not match grid");
  if (!model.anisotropies.all_equal()) throw std::invalid_argument("comparison: anisotropies must all be equal");
  if (!model.mobilities.all_equal()) throw std::invalid_argument("comparison: mobilities must all be equal");
  if (!model.forcing.is_zero()) throw std::invalid_argument("comparison: forcing must vanish");
  const Mask in_phase = initial.mask(phase);
  if ((seed && !in_phase).any()) throw std::invalid_argument("comparison: seed is not contained in the phase");
}

namespace {

Index band_cells(const Grid& g, const Mask& a, bool a_ext, const Mask& b, bool b_ext) {
  Index count = 0;
  for (Index c = 0; c < g.cells(); ++c) {
    const Coords x = g.coords(c);
    bool edge = false;
    for (int k = 0; k < g.dim() && !edge; ++k)
      for (int s : {-1, 1}) {
        Coords y = x;
        y[std::size_t(k)] += s;
        const bool in = g.contains(y);
        const bool ya = in ? a[g.index(y)] : a_ext;
        const bool yb = in ? b[g.index(y)] : b_ext;
        if (ya != a[c] || yb != b[c]) edge = true;
      }
    count += edge ? 1 : 0;
  }
  return count;
}

}  // namespace

ComparisonResult run_comparison(const LabelField& initial, const Mask& seed, int phase, const FlowModel& model,
                                const FlowParams& params) {
  validate_comparison(initial, seed, phase, model);
  params.validate();
  const bool ext = phase == initial.exterior();
  const Grid& g = initial.grid;
  FlowModel two;
  two.anisotropies = NormFamily::uniform(model.anisotropies[0], 2, FamilyRole::Anisotropies);
  two.mobilities = NormFamily::uniform(model.mobilities[0], 2, FamilyRole::Mobilities);
  two.forcing = Forcing::zero(g, 2);

  ComparisonResult out;
  out.phase = phase;
  out.multiphase.params = params;
  out.two_phase.params = params;
  Recorder rm(params, out.multiphase), rt(params, out.two_phase);
  LabelField multi = initial;
  LabelField pair = seed_field(g, seed, ext);
  const int seed_label = ext ? 2 : 1;

  auto record = [&](Index k) {
    const Mask e = pair.mask(seed_label);
    const Mask a = multi.mask(phase);
    ComparisonStep s;
    s.k = k;
    s.violations = (e && !a).count();
    s.band = band_cells(g, e, ext, a, ext);
    s.seed_cells = e.count();
    s.phase_cells = a.count();
    out.series.push_back(s);
  };

  out.multiphase.series.push_back(initial_record(multi, model));
  out.two_phase.series.push_back(initial_record(pair, two));
  rm.keep(0, multi);
  rt.keep(0, pair);
  record(0);
  const Index steps = params.step_index(params.horizon);
  for (Index k = 1; k <= steps; ++k) {
    StepRecord r;
    multi = advance(multi, model, params, k, r);
    out.multiphase.series.push_back(r);
    rm.keep(k, multi);

    const StepProblem prob(pair, two.anisotropies, two.mobilities, two.forcing, params.lambda);
    StepResult sr = step_multiphase(prob, params.solver);
    StepRecord r2;
    r2.k = k;
    r2.report = sr.report;
    r2.per_phi = sr.report.energy_perimeter;
    r2.force = sr.report.energy_force;
    r2.dissipation = sr.report.energy_dissipation;
    if (!(sr.field == pair)) r2.sym_diff = sym_diff_volume(pair, sr.field).total;
    pair = std::move(sr.field);
    out.two_phase.series.push_back(r2);
    rt.keep(k, pair);
    record(k);
  }
  rm.finish();
  rt.finish();
  return out;
}

}  // namespace mmflow
