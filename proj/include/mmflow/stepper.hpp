#pragma once

#include "mmflow/disttrans.hpp"
#include "mmflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmflow {

struct SolverSettings {
  double gap_tol = 0;  // <= 0 selects min(1e-7 * cell count, h^(dim-1) / 4)
  int max_iters = 20000;
  int check_every = 50;

  double effective_gap_tol(const Grid& g) const {
    if (gap_tol > 0) return gap_tol;
    return std::min(1e-7 * double(g.cells()), 0.25 * std::pow(g.h(), g.dim() - 1));
  }
};

/// One minimizing-movement step: minimize
/// Per_Phi(A) + force(A) + lambda * dissipation(A, prev).
struct StepProblem {
  LabelField prev;
  NormFamily anisotropies;
  NormFamily mobilities;
  Forcing forcing;
  double lambda = 1;

  StepProblem() = default;
  StepProblem(LabelField p, NormFamily phi, NormFamily psi, Forcing h, double l)
      : prev(std::move(p)), anisotropies(std::move(phi)), mobilities(std::move(psi)), forcing(std::move(h)), lambda(l) {}

  void validate() const;
};

struct StepReport {
  double energy_perimeter = 0;
  double energy_force = 0;
  double energy_dissipation = 0;
  double total = 0;
  int iterations = 0;
  double duality_gap = 0;
  bool converged = true;
  bool repaired = false;
  bool repair_limit = false;
  bool accepted = true;
};

struct StepResult {
  LabelField field;
  StepReport report;
};

/// Raised by oracle_minimize when the enumeration would exceed its cap.
class TooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

StepReport step_energy(const LabelField& candidate, const StepProblem& problem);
StepReport step_energy(const LabelField& candidate, const StepProblem& problem,
                       const std::vector<SignedDistanceField>& prev_distances);

/// N = 1: solve the relaxation over [0,1]-valued fields, threshold at 1/2.
StepResult step_two_phase(const StepProblem& problem, const SolverSettings& settings = {});

/// N >= 1: simplex relaxation, argmax rounding, single-cell repair sweeps.
StepResult step_multiphase(const StepProblem& problem, const SolverSettings& settings = {});

/// step_two_phase for N = 1, step_multiphase otherwise.
StepResult step(const StepProblem& problem, const SolverSettings& settings = {});

struct OracleResult {
  LabelField field;
  double energy = 0;
};

/// Exhaustive minimization over all labelings of the cells not owned by a
/// frozen phase; the lexicographically first minimizer wins.
OracleResult oracle_minimize(const StepProblem& problem, int max_cells = 20);

/// Phases whose previous boundary is empty; they cannot change.
std::vector<bool> frozen_phases(const std::vector<SignedDistanceField>& prev_distances);

}  // namespace mmflow
