#pragma once

#include "mmflow/diagnostics.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace mmflow {

enum class Outcome { Pass, Audit, Fail };

const char* to_string(Outcome o);

struct SuiteResult {
  std::string name;
  Outcome outcome = Outcome::Pass;
  std::string summary;
  double seconds = 0;
};

/// Random norm of the given kind: diagonal weights in [0.5, 2], polyhedral
/// with 2-4 random symmetric covector pairs (always spanning).
Norm random_norm(NormKind kind, int dim, std::mt19937_64& rng);

/// step_two_phase against oracle_minimize on 3x3 and 4x4 grids, all norm
/// kinds, random forcing and lambda in [1, 21]; energies must agree to 1e-6.
SuiteResult verify_two_phase_oracle(int trials, std::uint64_t seed);

/// 3-phase (N = 2) problems on 3x3 grids: within 2% of the oracle in at
/// least 95% of cases and never above the previous field's energy.
SuiteResult verify_multiphase_oracle(int trials, std::uint64_t seed);

/// Exact inclusion of the oracle two-phase minimizer from a seed inside
/// phase i in the oracle multiphase minimizer, equal norms and no forcing.
SuiteResult verify_comparison_oracle(int trials, std::uint64_t seed);

/// Submodularity of the discrete perimeter over random mask pairs, per norm kind.
SuiteResult verify_submodularity(int trials_per_kind, std::uint64_t seed);

/// Inclusion monotonicity and complement antisymmetry of signed_dist on
/// random nested masks, plus the eikonal residual on smooth masks.
SuiteResult verify_distance(int trials, std::uint64_t seed);

/// Closed-form constants against hand-computed values.
SuiteResult verify_constants();

struct VerifyOptions {
  std::uint64_t seed = 1;
  int two_phase_trials = 200;
  int multiphase_trials = 100;
  int comparison_trials = 100;
  int submodularity_trials = 10000;
  int distance_trials = 1000;
};

std::vector<SuiteResult> run_verify_suites(const VerifyOptions& opt);

/// 0 when every suite passes, 1 when the worst outcome is an audit, 2 otherwise.
int exit_code(const std::vector<SuiteResult>& results);

}  // namespace mmflow
