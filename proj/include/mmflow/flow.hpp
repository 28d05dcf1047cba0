#pragma once

#include "mmflow/stepper.hpp"

#include <functional>

namespace mmflow {

struct FlowParams {
  double lambda = 1;
  double horizon = 0;                  // T
  std::vector<double> checkpoint_times;  // sorted, within [0, T]
  SolverSettings solver;
  bool every_step = false;  // keep the field after every step

  void validate() const;
  /// floor(lambda * t), guarded against t * lambda landing just below an
  /// integer through rounding.
  Index step_index(double t) const;
};

/// Per-step scalars; row k describes the field after step k (row 0 is the
/// initial field).
struct StepRecord {
  Index k = 0;
  double per_phi = 0;
  double force = 0;
  double dissipation = 0;
  double sym_diff = 0;      // |G(k) delta G(k-1)|
  double displacement = 0;  // max over changed cells of the psi-distance moved
  StepReport report;
};

struct Frame {
  Index step = 0;
  double time = 0;
  LabelField field;
};

struct FlowTrace {
  FlowParams params;
  std::vector<Frame> frames;  // sorted by step, frame 0 is the initial field
  std::vector<std::pair<double, Index>> checkpoints;  // time -> frame index
  std::vector<StepRecord> series;

  const LabelField& at_checkpoint(std::size_t i) const { return frames[std::size_t(checkpoints[i].second)].field; }
  Index steps() const { return series.empty() ? 0 : series.back().k; }
};

/// Physics shared by every step of a flow: the previous field is replaced
/// at each step.
struct FlowModel {
  NormFamily anisotropies;
  NormFamily mobilities;
  Forcing forcing;
};

using StepObserver = std::function<void(const StepRecord&, const LabelField&)>;

/// G(lambda, k) for k = 1..floor(lambda T), starting from `initial`.
FlowTrace run_flow(const LabelField& initial, const FlowModel& model, const FlowParams& params,
                   const StepObserver& observer = {});

struct GmmResult {
  std::vector<double> lambdas;
  std::vector<FlowTrace> traces;
  /// cauchy[t][a][b] = |G(lambda_a, t) delta G(lambda_b, t)| per checkpoint.
  std::vector<Eigen::MatrixXd> cauchy;
  bool converged = false;  // consecutive-lambda distances below threshold
  double threshold = 0;
};

/// One flow per lambda (run concurrently on `threads` workers).
GmmResult extract_gmm(const LabelField& initial, const FlowModel& model, const std::vector<double>& lambdas,
                      const FlowParams& base, double threshold, int threads = 1);

struct ComparisonStep {
  Index k = 0;
  Index violations = 0;  // cells of the two-phase set outside phase i
  Index band = 0;        // cells adjacent to either interface
  Index seed_cells = 0;
  Index phase_cells = 0;
};

struct ComparisonResult {
  FlowTrace multiphase;
  FlowTrace two_phase;
  int phase = 1;
  std::vector<ComparisonStep> series;
};

/// Checks the hypotheses of the comparison run: equal anisotropies, equal
/// mobilities, zero forcing, seed inside phase i (bounded complement if i is
/// the exterior phase).  Throws std::invalid_argument naming the violation.
void validate_comparison(const LabelField& initial, const Mask& seed, int phase, const FlowModel& model);

/// Multiphase flow from `initial` and the two-phase flow from `seed` in
/// lockstep at the same lambda.  The two-phase leg uses the multiphase
/// stepper with N = 1 and the family {phi, phi}.
ComparisonResult run_comparison(const LabelField& initial, const Mask& seed, int phase, const FlowModel& model,
                                const FlowParams& params);

/// Two-phase field of a seed: label 1 on the bounded side.
LabelField seed_field(const Grid& grid, const Mask& seed, bool seed_is_exterior);

}  // namespace mmflow
