#include "mmflow/commands.hpp"

#include "mmflow/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <sstream>

namespace mmflow {

namespace fs = std::filesystem;
using nlohmann::json;

void apply_overrides(RunConfig& cfg, const CommandOverrides& o) {
  if (o.out) cfg.out_dir = *o.out;
  if (o.threads) cfg.threads = std::max(1, *o.threads);
  if (o.seed) cfg.seed = *o.seed;
}

Outcome worst(const std::vector<CheckLine>& lines) {
  Outcome w = Outcome::Pass;
  for (const CheckLine& l : lines)
    if (int(l.outcome) > int(w)) w = l.outcome;
  return w;
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::Pass: return kExitPass;
    case Outcome::Audit: return kExitAudit;
    case Outcome::Fail: return kExitFail;
  }
  return kExitFail;
}

std::string diagnostics_csv(const std::vector<CheckLine>& lines, std::optional<std::uint64_t> config_hash) {
  std::ostringstream out;
  if (config_hash) out << hash_line(*config_hash);
  out << "trace,check,value,threshold,outcome,detail\n";
  for (const CheckLine& l : lines) {
    std::string detail = l.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    out << l.trace << ',' << l.check << ',' << format_double(l.value) << ',' << format_double(l.threshold) << ','
        << to_string(l.outcome) << ',' << detail << '\n';
  }
  return out.str();
}

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

bool equal_norm_hypotheses(const FlowModel& m) {
  return m.anisotropies.all_equal() && m.mobilities.all_equal() && m.forcing.is_zero();
}

std::vector<double> density_radii(const RunConfig& cfg) {
  if (!cfg.diagnostics.radii.empty()) return cfg.diagnostics.radii;
  const double h = cfg.grid.h();
  return {2 * h, 4 * h, 8 * h};
}

std::vector<double> ells(const RunConfig& cfg, double lambda) {
  if (!cfg.diagnostics.ells.empty()) return cfg.diagnostics.ells;
  return {cfg.grid.h(), 1 / std::sqrt(lambda)};
}

void print(std::ostream& log, const CheckLine& l) {
  log << to_string(l.outcome) << ' ' << l.trace << ' ' << l.check << ": " << l.detail << '\n';
}

std::vector<FlowTrace> run_lambdas(const RunConfig& cfg, std::ostream& log) {
  std::vector<FlowTrace> traces(cfg.lambdas.size());
  const std::size_t workers = std::size_t(std::max(1, cfg.threads));
  for (std::size_t start = 0; start < cfg.lambdas.size(); start += workers) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = start; i < std::min(cfg.lambdas.size(), start + workers); ++i)
      jobs.push_back(std::async(workers == 1 ? std::launch::deferred : std::launch::async,
                                [&, i] { traces[i] = run_flow(cfg.initial, cfg.model, cfg.flow_params(cfg.lambdas[i])); }));
    for (auto& j : jobs) j.get();
  }
  for (const FlowTrace& t : traces) {
    const auto ext = first_extinction(t);
    log << "lambda " << lambda_name(t.params.lambda) << ": " << t.steps() << " steps";
    if (!t.series.empty()) log << ", final Per_phi " << num(t.series.back().per_phi);
    if (ext) log << ", first extinction at t = " << format_double(*ext);
    log << '\n';
  }
  return traces;
}

std::vector<std::string> trace_files(const FlowTrace& t, const std::string& prefix) {
  std::vector<std::string> files;
  for (const auto& [time, frame] : t.checkpoints) files.push_back(prefix + "/" + time_name(time) + ".mmlf");
  files.push_back(prefix + "/series.csv");
  files.push_back(prefix + "/steps.csv");
  return files;
}

}  // namespace

fs::path lambda_dir(const RunConfig& cfg, double lambda) { return cfg.out_dir / lambda_name(lambda); }

void write_manifest(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& files) {
  json j;
  j["name"] = cfg.name;
  j["command"] = command;
  j["config_hash"] = hex64(cfg.hash);
  j["lambdas"] = cfg.lambdas;
  j["horizon"] = cfg.horizon;
  j["files"] = files;
  write_atomic(cfg.out_dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<fs::path> find_traces(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  auto has_checkpoints = [](const fs::path& d) {
    for (const auto& e : fs::directory_iterator(d)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && e.path().extension() == ".mmlf" && !name.empty() && name[0] == 't') return true;
    }
    return false;
  };
  if (has_checkpoints(root)) out.push_back(root);
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_directory() && has_checkpoints(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CheckLine> diagnose_trace(const FlowTrace& trace, const RunConfig& cfg, const std::string& name) {
  std::vector<CheckLine> lines;
  const DiagnosticsSpec& spec = cfg.diagnostics;
  const double lambda = trace.params.lambda;
  auto add = [&](std::string check, double value, double threshold, Outcome o, std::string detail) {
    lines.push_back({name, std::move(check), value, threshold, o, std::move(detail)});
  };

  if (trace.series.empty()) {
    add("monotone", 0, spec.monotone_tol, Outcome::Audit, "no step series stored");
  } else {
    const MonotoneCheck m = check_monotone(trace, spec.monotone_tol);
    add("monotone", double(m.violations), spec.monotone_tol, m.violations == 0 ? Outcome::Pass : Outcome::Fail,
        std::to_string(m.violations) + " increases of Per_phi + force over " + std::to_string(m.steps) +
            " accepted steps, worst " + num(m.worst_increase));
  }

  const ConfinementCheck conf = check_confinement(trace, cfg.forcing_radius());
  add("confinement", double(conf.outside_cells), 0, conf.outside_cells == 0 ? Outcome::Pass : Outcome::Fail,
      std::to_string(conf.outside_cells) + " bounded-phase cells outside the dilated hull over " +
          std::to_string(conf.frames) + " frames");

  const std::vector<double> radii = density_radii(cfg);
  const DensityBounds bounds = density_bounds(density_inputs(cfg.model, trace.frames.front().field.grid, lambda, spec.p));
  double worst_fraction = 0;
  bool window_empty = false;
  for (const Frame& f : trace.frames) {
    const DensityReport rep = density_report(f.field, bounds, radii);
    worst_fraction = std::max(worst_fraction, rep.violation_fraction);
    window_empty = window_empty || rep.window_empty;
  }
  {
    std::string detail = "worst violation fraction " + num(worst_fraction) + " over " +
                         std::to_string(trace.frames.size()) + " frames; r_hat " + num(bounds.r_hat) + ", r_tilde " +
                         num(bounds.r_tilde);
    if (window_empty) detail += "; window empty";
    if (!bounds.lower_bounds_hold) detail += "; lower bounds unavailable";
    add("density", worst_fraction, 0, worst_fraction == 0 && !window_empty ? Outcome::Pass : Outcome::Audit, detail);
  }

  Index vd_pairs = 0, vd_fail = 0, vd_hyp = 0;
  double vd_worst = 0;
  const double r0 = *std::max_element(radii.begin(), radii.end());
  for (std::size_t k = 1; k < trace.frames.size(); ++k) {
    const Frame& prev = trace.frames[k - 1];
    const Frame& next = trace.frames[k];
    if (next.step != prev.step + 1) continue;
    const double theta = density_report(next.field, radii).theta;
    for (int i = 1; i <= next.field.bounded_phases; ++i) {
      const Mask a = next.field.mask(i);
      if (!a.any() || a.all()) continue;
      if (!(theta > 0)) {
        ++vd_hyp;
        continue;
      }
      for (double ell : ells(cfg, lambda)) {
        const VolumeDistance vd = check_volume_distance(a, prev.field.mask(i), next.field.grid, theta, r0, ell);
        ++vd_pairs;
        if (!vd.hypothesis_holds) ++vd_hyp;
        if (!vd.holds) ++vd_fail;
        if (vd.rhs > 0) vd_worst = std::max(vd_worst, vd.lhs / vd.rhs);
      }
    }
  }
  if (vd_pairs == 0) {
    add("volume_distance", 0, 1, Outcome::Audit, "no consecutive stored frames to audit");
  } else {
    add("volume_distance", vd_worst, 1, vd_fail == 0 ? (vd_hyp == 0 ? Outcome::Pass : Outcome::Audit) : Outcome::Fail,
        std::to_string(vd_fail) + " failures over " + std::to_string(vd_pairs) + " audited pairs, worst lhs/rhs " +
            num(vd_worst) + ", " + std::to_string(vd_hyp) + " without the density hypothesis");
  }

  const auto ext = first_extinction(trace);
  add("extinction", ext ? *ext : -1, 0, Outcome::Pass,
      ext ? "first bounded phase empty at t = " + format_double(*ext) : std::string("all phases survive"));

  const bool hyp = equal_norm_hypotheses(cfg.model);
  const double t_max = ext ? *ext / 2 : trace.frames.back().time;
  const auto pairs = holder_pairs(trace, t_max);
  if (pairs.size() < 5) {
    add("holder", 0, spec.holder_min, Outcome::Audit, std::to_string(pairs.size()) + " time pairs, need 5");
  } else {
    double c6 = 0, per0 = 0;
    if (hyp) {
      c6 = scheme_constants(scheme_inputs(cfg.model, trace.frames.front().field.grid, lambda, spec.p)).C6;
      per0 = per_phi(trace.frames.front().field, cfg.model.anisotropies).total;
    }
    const HolderFit fit = holder_fit(trace, pairs, c6, per0);
    Outcome o = Outcome::Pass;
    std::string detail;
    if (fit.stationary) {
      detail = "stationary";
    } else {
      detail = "exponent " + num(fit.exponent) + " over " + std::to_string(fit.pairs) + " pairs";
      if (fit.exponent < spec.holder_min) o = hyp ? Outcome::Fail : Outcome::Audit;
    }
    if (c6 > 0) {
      detail += "; C6 " + num(c6) + ", worst |dM| / bound " + num(fit.worst_bound_ratio);
      if (!fit.bound_holds) o = Outcome::Fail;
    }
    add("holder", fit.exponent, spec.holder_min, o, detail);
  }
  return lines;
}

std::vector<CheckLine> diagnose_displacement(const std::vector<FlowTrace>& traces, const RunConfig& cfg) {
  std::vector<CheckLine> lines;
  std::vector<const FlowTrace*> two_phase;
  for (const FlowTrace& t : traces)
    if (!t.frames.empty() && t.frames.front().field.bounded_phases == 1) two_phase.push_back(&t);
  if (two_phase.size() < 4) return lines;
  std::vector<FlowTrace> sorted;
  for (const FlowTrace* t : two_phase) sorted.push_back(*t);
  std::sort(sorted.begin(), sorted.end(),
            [](const FlowTrace& a, const FlowTrace& b) { return a.params.lambda < b.params.lambda; });
  const SchemeConstants k =
      scheme_constants(scheme_inputs(cfg.model, sorted.front().frames.front().field.grid, sorted.front().params.lambda,
                                     cfg.diagnostics.p));
  const DisplacementFit fit = displacement_scaling(sorted, k.C1);
  const bool in_range = fit.slope >= -0.6 && fit.slope <= -0.4;
  std::size_t used = 0, within = 0;
  for (std::size_t i = 0; i < fit.used.size(); ++i) {
    used += fit.used[i] ? 1 : 0;
    within += fit.within_c1[i] ? 1 : 0;
  }
  lines.push_back({"all", "displacement_slope", fit.slope, -0.5, in_range && used >= 2 ? Outcome::Pass : Outcome::Audit,
                   "slope " + num(fit.slope) + " over " + std::to_string(used) + " moving traces (target [-0.6, -0.4])"});
  lines.push_back({"all", "displacement_c1", double(within), double(fit.used.size()),
                   within == fit.used.size() ? Outcome::Pass : Outcome::Audit,
                   std::to_string(within) + " of " + std::to_string(fit.used.size()) + " traces within C1 / sqrt(lambda), C1 " +
                       num(k.C1)});
  return lines;
}

std::vector<CheckLine> diagnose_comparison(const ComparisonResult& run, const RunConfig& cfg) {
  std::vector<CheckLine> lines;
  const InclusionSeries s = check_inclusion_series(run, cfg.model.mobilities[run.phase - 1]);
  const double lim = cfg.diagnostics.inclusion_max;
  lines.push_back({"compare", "inclusion", s.max_fraction, lim, s.max_fraction <= lim ? Outcome::Pass : Outcome::Fail,
                   "max violating fraction " + num(s.max_fraction) + " of band cells, " +
                       std::to_string(s.total_violations) + " violating cells over " + std::to_string(s.fractions.size()) +
                       " steps"});
  lines.push_back({"compare", "persistence", double(s.persistence_failures), 0,
                   s.persistence_failures == 0 ? Outcome::Pass : Outcome::Fail,
                   std::to_string(s.persistence_failures) + " frames with the seed alive and phase " +
                       std::to_string(run.phase) + " empty"});
  lines.push_back({"compare", "sign_condition", double(s.sign_failures), 0,
                   s.sign_failures == 0 ? Outcome::Pass : Outcome::Fail,
                   std::to_string(s.sign_failures) + " failures over " + std::to_string(s.sign_checks) + " cell checks"});
  return lines;
}

int cmd_step(const RunConfig& cfg, std::ostream& log) {
  const double lambda = cfg.lambdas.front();
  const StepProblem problem(cfg.initial, cfg.model.anisotropies, cfg.model.mobilities, cfg.model.forcing, lambda);
  problem.validate();
  StepResult result;
  std::optional<double> oracle_energy;
  if (cfg.oracle) {
    const OracleResult o = oracle_minimize(problem, cfg.oracle_max_cells);
    oracle_energy = o.energy;
    result.field = o.field;
    result.report = step_energy(o.field, problem);
  } else {
    result = step(problem, cfg.solver);
  }
  const StepReport& r = result.report;
  std::ostringstream csv;
  csv << hash_line(cfg.hash)
      << "lambda,per_phi,force,dissipation,total,iterations,gap,converged,repaired,repair_limit,accepted\n"
      << format_double(lambda) << ',' << format_double(r.energy_perimeter) << ',' << format_double(r.energy_force)
      << ',' << format_double(r.energy_dissipation) << ',' << format_double(r.total) << ',' << r.iterations << ','
      << format_double(r.duality_gap) << ',' << int(r.converged) << ',' << int(r.repaired) << ','
      << int(r.repair_limit) << ',' << int(r.accepted) << '\n';
  write_label_field(cfg.out_dir / "step.mmlf", result.field);
  write_atomic(cfg.out_dir / "step.csv", csv.str());
  write_manifest(cfg, "step", {"step.mmlf", "step.csv"});
  log << "step at lambda " << lambda_name(lambda) << ": energy " << format_double(r.total) << " (perimeter "
      << num(r.energy_perimeter) << ", force " << num(r.energy_force) << ", dissipation " << num(r.energy_dissipation)
      << "), " << r.iterations << " iterations, gap " << num(r.duality_gap) << '\n';
  if (oracle_energy) log << "oracle minimum energy " << format_double(*oracle_energy) << '\n';
  if (!r.converged) {
    log << "solver did not reach the gap tolerance; output written\n";
    return kExitNonConverged;
  }
  return kExitPass;
}

int cmd_flow(const RunConfig& cfg, std::ostream& log) {
  const std::vector<FlowTrace> traces = run_lambdas(cfg, log);
  std::vector<std::string> files;
  bool converged = true;
  for (const FlowTrace& t : traces) {
    write_trace(lambda_dir(cfg, t.params.lambda), t, cfg.hash);
    const auto f = trace_files(t, lambda_name(t.params.lambda));
    files.insert(files.end(), f.begin(), f.end());
    for (const StepRecord& r : t.series) converged = converged && r.report.converged;
  }
  write_manifest(cfg, "flow", files);
  if (!converged) {
    log << "some steps did not reach the gap tolerance\n";
    return kExitNonConverged;
  }
  return kExitPass;
}

int cmd_gmm(const RunConfig& cfg, std::ostream& log) {
  std::vector<double> lambdas = cfg.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  const FlowParams base = cfg.flow_params(lambdas.front());
  const GmmResult g =
      extract_gmm(cfg.initial, cfg.model, lambdas, base, cfg.diagnostics.gmm_threshold, cfg.threads);
  std::vector<std::string> files;
  for (const FlowTrace& t : g.traces) {
    write_trace(lambda_dir(cfg, t.params.lambda), t, cfg.hash);
    const auto f = trace_files(t, lambda_name(t.params.lambda));
    files.insert(files.end(), f.begin(), f.end());
  }
  std::ostringstream csv;
  csv << hash_line(cfg.hash) << "time,lambda_a,lambda_b,distance\n";
  for (std::size_t t = 0; t < g.cauchy.size(); ++t)
    for (Eigen::Index a = 0; a < g.cauchy[t].rows(); ++a)
      for (Eigen::Index b = 0; b < g.cauchy[t].cols(); ++b)
        csv << format_double(base.checkpoint_times[t]) << ',' << format_double(lambdas[std::size_t(a)]) << ','
            << format_double(lambdas[std::size_t(b)]) << ',' << format_double(g.cauchy[t](a, b)) << '\n';
  write_atomic(cfg.out_dir / "cauchy.csv", csv.str());
  files.push_back("cauchy.csv");
  write_manifest(cfg, "gmm", files);
  double worst_consecutive = 0;
  for (const auto& m : g.cauchy)
    for (Eigen::Index a = 0; a + 1 < m.rows(); ++a) worst_consecutive = std::max(worst_consecutive, m(a, a + 1));
  const Outcome o = g.converged ? Outcome::Pass : Outcome::Audit;
  log << to_string(o) << " gmm: worst consecutive-lambda distance " << num(worst_consecutive) << " (threshold "
      << num(g.threshold) << ") over " << lambdas.size() << " lambdas\n";
  return exit_code(o);
}

int cmd_compare(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.compare) throw ConfigError("config: compare requires a 'compare' section");
  const double lambda = cfg.lambdas.front();
  const ComparisonResult run =
      run_comparison(cfg.initial, cfg.compare->seed, cfg.compare->phase, cfg.model, cfg.flow_params(lambda));
  const fs::path dir = lambda_dir(cfg, lambda);
  write_trace(dir / "multiphase", run.multiphase, cfg.hash);
  write_trace(dir / "two_phase", run.two_phase, cfg.hash);
  std::ostringstream csv;
  csv << hash_line(cfg.hash) << "k,violations,band,fraction,seed_cells,phase_cells\n";
  for (const ComparisonStep& s : run.series)
    csv << s.k << ',' << s.violations << ',' << s.band << ','
        << format_double(s.band > 0 ? double(s.violations) / double(s.band) : 0.0) << ',' << s.seed_cells << ','
        << s.phase_cells << '\n';
  write_atomic(cfg.out_dir / "inclusion.csv", csv.str());
  std::vector<std::string> files = trace_files(run.multiphase, lambda_name(lambda) + "/multiphase");
  const auto f2 = trace_files(run.two_phase, lambda_name(lambda) + "/two_phase");
  files.insert(files.end(), f2.begin(), f2.end());
  files.push_back("inclusion.csv");
  write_manifest(cfg, "compare", files);
  const auto lines = diagnose_comparison(run, cfg);
  for (const CheckLine& l : lines) print(log, l);
  return exit_code(worst(lines));
}

int cmd_diagnose(const RunConfig& cfg, const fs::path& trace_root, std::ostream& log) {
  const std::vector<fs::path> dirs = find_traces(trace_root);
  if (dirs.empty()) {
    log << "no trace found under " << trace_root.string() << '\n';
    return kExitFail;
  }
  std::vector<CheckLine> lines;
  std::vector<FlowTrace> traces;
  for (const fs::path& d : dirs) {
    FlowTrace t = read_trace(d);
    if (!(t.frames.front().field.grid == cfg.grid)) throw std::runtime_error("trace grid does not match the config: " + d.string());
    std::string name = fs::relative(d, trace_root).generic_string();
    if (name == ".") name = d.filename().string();
    const auto l = diagnose_trace(t, cfg, name);
    lines.insert(lines.end(), l.begin(), l.end());
    if (d.filename() != "two_phase" && d.filename() != "multiphase") traces.push_back(std::move(t));
  }
  const auto disp = diagnose_displacement(traces, cfg);
  lines.insert(lines.end(), disp.begin(), disp.end());
  for (const CheckLine& l : lines) print(log, l);
  write_atomic(cfg.out_dir / "diagnostics.csv", diagnostics_csv(lines, cfg.hash));
  const Outcome o = worst(lines);
  log << "diagnose: " << to_string(o) << " over " << dirs.size() << " traces\n";
  return exit_code(o);
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  VerifyOptions opt;
  if (cfg.seed != 0) opt.seed = cfg.seed;
  const auto results = run_verify_suites(opt);
  for (const SuiteResult& r : results)
    log << to_string(r.outcome) << ' ' << r.name << ": " << r.summary << " (" << num(r.seconds) << " s)\n";
  return exit_code(results);
}

}  // namespace mmflow
