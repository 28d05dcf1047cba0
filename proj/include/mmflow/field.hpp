#pragma once

#include "mmflow/grid.hpp"
#include "mmflow/norms.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mmflow {

using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// A partition of the box: labels in {1..N+1}; phase N+1 also owns every
/// cell outside the grid.
struct LabelField {
  Grid grid;
  int bounded_phases = 1;  // N
  Eigen::VectorXi labels;

  LabelField() = default;
  LabelField(Grid g, int n, int fill) : grid(std::move(g)), bounded_phases(n), labels(Eigen::VectorXi::Constant(grid.cells(), fill)) {
    validate();
  }
  LabelField(Grid g, int n, Eigen::VectorXi l) : grid(std::move(g)), bounded_phases(n), labels(std::move(l)) { validate(); }

  int phases() const { return bounded_phases + 1; }
  int exterior() const { return bounded_phases + 1; }
  Index cells() const { return grid.cells(); }
  int operator[](Index i) const { return labels[i]; }

  void validate() const;
  Mask mask(int phase) const { return (labels.array() == phase); }
  Index count(int phase) const { return (labels.array() == phase).count(); }
  double volume(int phase) const { return double(count(phase)) * grid.cell_volume(); }

  friend bool operator==(const LabelField& a, const LabelField& b) {
    return a.grid == b.grid && a.bounded_phases == b.bounded_phases && a.labels == b.labels;
  }
};

struct ScalarField {
  Grid grid;
  Eigen::VectorXd values;

  ScalarField() = default;
  ScalarField(Grid g, double fill) : grid(std::move(g)), values(Eigen::VectorXd::Constant(grid.cells(), fill)) {}
  ScalarField(Grid g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.cells()) throw std::invalid_argument("scalar field: size does not match grid");
  }
};

/// Relaxed partition: per-cell weights on the probability simplex.
struct SoftPartition {
  Grid grid;
  Eigen::MatrixXd weights;  // cells x (N+1)

  void validate(double tol = 1e-8) const;
  static SoftPartition from_labels(const LabelField& f);
};

/// Forcing terms H_1..H_{N+1} with H_i >= H_{N+1} outside B_R(0).
struct Forcing {
  std::vector<ScalarField> fields;
  double support_radius = 0;

  static Forcing zero(const Grid& g, int phases);
  bool is_zero() const;
  /// Checks sizes and H_i >= H_{N+1} at every cell centre with |x| > R.
  void validate(const Grid& g, int phases) const;
  /// H_i(x) - H_{N+1}(x) for a bounded phase i (1-based); 0 for the exterior.
  double relative(int phase, Index cell) const {
    const int ext = int(fields.size());
    if (phase == ext) return 0;
    return fields[std::size_t(phase - 1)].values[cell] - fields[std::size_t(ext - 1)].values[cell];
  }
};

/// Sum over cells (and the one-cell exterior layer) of h^dim phi(forward
/// gradient), with out-of-grid cells reading `exterior`.
double perimeter_phi(const Eigen::VectorXd& indicator, const Norm& norm, const Grid& grid, double exterior = 0.0);

struct Breakdown {
  double total = 0;
  std::vector<double> per_phase;  // index 0 = phase 1
};

/// Per_Phi = sum_i perimeter_phi(chi_i, phi_i).
Breakdown per_phi(const LabelField& partition, const NormFamily& anisotropies);

/// sum_j |A_j delta B_j| over all N+1 labels.
Breakdown sym_diff_volume(const LabelField& a, const LabelField& b);

/// sum_{j<=N} sum_{x in A_j} h^dim (H_j - H_{N+1}); the constant integral of
/// H_{N+1} is left out.
double force_integral(const LabelField& partition, const Forcing& forcing);

/// Cells whose centres lie within `extra_radius` of the convex hull of the
/// bounded-phase cell centres (united with B_R(0) when `ball_radius` > 0).
Mask convex_hull_mask(const LabelField& partition, double extra_radius, double ball_radius = 0.0);

/// Coefficient vectors c_k of the convex closure of the per-cell perimeter
/// term: on label fields it equals phi(forward difference), on relaxed
/// fields it is max_k <c_k, forward difference>, and it obeys the discrete
/// coarea formula.  Rows are covectors in R^dim.
Eigen::MatrixXd closure_covectors(const Norm& norm);

/// Whether the binary per-cell term phi(b_1 - b_0, ..., b_d - b_0) is
/// submodular; always true in 2D, checked explicitly in 3D.
bool local_term_submodular(const Norm& norm);

}  // namespace mmflow
