#pragma once

#include "mmflow/flow.hpp"

#include <optional>

namespace mmflow {

/// Volume of the unit ball, n = 2 or 3.
double unit_ball_volume(int dim);

struct DensityInputs {
  double c_phi = 1;
  double C_phi = 1;
  double kappa = 0;
  double lambda1 = 0;
  double lambda2 = 0;
  double alpha1 = 1;
  double alpha2 = 0.5;
  double r0 = 1;
  int dim = 2;
  int phases = 2;  // number of phases of the partition, exterior included
};

struct DensityBounds {
  DensityInputs inputs;
  double gamma = 0;
  double c_sharp = 0;          // lower perimeter-density constant
  double lower_vol_bound = 0;  // gamma^n
  double upper_vol_bound = 0;
  double upper_per_bound = 0;
  double beta1 = 0;
  double beta2 = 0;
  double r_hat = 0;
  double r_tilde = 0;  // 0 when the lower bounds are unavailable
  bool lower_bounds_hold = false;  // kappa < 2 c / (phases - 1)
};

DensityBounds density_bounds(const DensityInputs& in);

struct SchemeInputs {
  int dim = 2;
  double c_phi = 1, C_phi = 1;
  double c_psi = 1, C_psi = 1;
  double h_integral = 0;  // integral over D of |H|^p
  double p = 4;
  double lambda = 1;
  double diam_psi = 0;  // max_j diam_{psi_j} D
  double h_lp_max = 0;  // max_j ||H_j - H_{N+1}||_{L^p(D)}
  int bounded_phases = 1;
};

struct SchemeConstants {
  double C1 = 0, C2 = 0, C3 = 0, C4 = 0, C5 = 0, C6 = 0;
  double c3_radius_scale = 0;  // C3 / sqrt(lambda)
  double lambda1 = 0, lambda2 = 0;
};

SchemeConstants scheme_constants(const SchemeInputs& in);

/// Inputs measured from a model on the box of `grid`, with D taken as the box.
/// The two-phase H is H_1 - H_2.  p defaults to 2 * dim when <= 0.
SchemeInputs scheme_inputs(const FlowModel& model, const Grid& grid, double lambda, double p = 0);
DensityInputs density_inputs(const FlowModel& model, const Grid& grid, double lambda, double p = 0);

struct PhaseDensity {
  int phase = 0;
  Index boundary_cells = 0;
  double min_vol = 1, max_vol = 0;
  double min_per = 0, max_per = 0;
  Index samples = 0;
  Index lower_vol_violations = 0, upper_vol_violations = 0;
  Index lower_per_violations = 0, upper_per_violations = 0;
};

struct DensityReport {
  std::vector<PhaseDensity> phases;
  std::vector<double> radii;  // radii actually audited
  bool window_empty = false;
  double theta = 0;  // min over samples of P(A_i, B_r(x)) / r^(n-1)
  double violation_fraction = 0;
};

/// Discrete density ratios at every boundary cell of every nonempty phase:
/// |A_i cap B_r(x)| / |B_r(x)| by cell counts and the euclidean perimeter of
/// A_i inside B_r(x) over r^(n-1).  Radii below 2h are dropped; lower bounds
/// are only audited for r <= r_tilde and upper ones for r <= r_hat.
DensityReport density_report(const LabelField& field, const DensityBounds& bounds, const std::vector<double>& radii);

/// Same ratios without bounds; used to measure theta.
DensityReport density_report(const LabelField& field, const std::vector<double>& radii);

struct VolumeDistance {
  double lhs = 0;
  double rhs = 0;
  bool holds = false;
  bool hypothesis_holds = false;  // measured perimeter density >= theta
};

/// |a delta b| <= (5^n w_n / theta) max{1, (l/r0)^(n-1)} P(a) l + (1/l) sum_{a delta b} dist(x, da) h^n
/// with P the euclidean perimeter and dist the euclidean distance transform.
VolumeDistance check_volume_distance(const Mask& a, const Mask& b, const Grid& grid, double theta, double r0,
                                     double ell);

struct HolderFit {
  double exponent = 0;
  double constant = 0;  // exp(intercept)
  Index pairs = 0;
  bool stationary = false;
  double c6 = 0;
  double worst_bound_ratio = 0;  // max |dM| / (C6 Per(G) |t - t'|^(1/2))
  bool bound_holds = true;
};

/// Frame pairs with 0 < t < t' <= t_max and t' - t < 1.
std::vector<std::pair<std::size_t, std::size_t>> holder_pairs(const FlowTrace& trace, double t_max);

/// Least squares of log|G(t) delta G(t')| against log|t - t'|.  Pairs at zero
/// distance are left out of the regression.  c6 > 0 enables the pairwise
/// bound check against the initial perimeter.
HolderFit holder_fit(const FlowTrace& trace, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                     double c6 = 0, double initial_perimeter = 0);

struct DisplacementFit {
  std::vector<double> lambdas;
  std::vector<double> maxima;  // per trace
  std::vector<bool> within_c1;
  std::vector<bool> used;      // false when the trace never moved
  double slope = 0;
  double intercept = 0;
};

/// Regression of log(max per-step displacement) against log(lambda).
/// `c1` > 0 adds the per-trace check max <= c1 / sqrt(lambda).
DisplacementFit displacement_scaling(const std::vector<FlowTrace>& traces, double c1 = 0);

/// First frame time at which `phase` is empty.
std::optional<double> extinction_time(const FlowTrace& trace, int phase);

/// Extinction of the first bounded phase to vanish.
std::optional<double> first_extinction(const FlowTrace& trace);

struct InclusionSeries {
  std::vector<double> fractions;  // violations / band cells per step
  double max_fraction = 0;
  Index total_violations = 0;
  Index persistence_failures = 0;  // seed alive while phase i is empty
  Index sign_checks = 0;
  Index sign_failures = 0;
};

/// Per-step inclusion audit of a paired run, plus the sign condition
/// 2e - g_i + g_j >= 0 on steps where the seed set is inside phase i and both
/// traces kept a frame.
InclusionSeries check_inclusion_series(const ComparisonResult& run, const Norm& mobility);

struct SubmodularityCheck {
  bool submodular = true;
  double sub_excess = 0;  // lhs - rhs
  bool truncation = true;
  double trunc_excess = 0;
  double slack = 0;
};

/// P(E cap F) + P(E cup F) <= P(E) + P(F) to 1e-9, and P(E cap C) <= P(E)
/// within 4 C_phi h facets.
SubmodularityCheck check_submodularity_and_truncation(const Mask& e, const Mask& f, const Mask& c, int facets,
                                                      const Norm& norm, const Grid& grid);

struct MonotoneCheck {
  Index steps = 0;
  Index violations = 0;
  double worst_increase = 0;
};

/// Per_Phi + force must not increase over any accepted step.
MonotoneCheck check_monotone(const FlowTrace& trace, double tol = 1e-9);

struct ConfinementCheck {
  Index frames = 0;
  Index outside_cells = 0;
};

/// Bounded-phase cells of every frame outside the hull of the initial
/// bounded phases (and B_R when forced), dilated by 2h.
ConfinementCheck check_confinement(const FlowTrace& trace, double ball_radius);

/// Least squares y = slope * x + intercept.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mmflow
