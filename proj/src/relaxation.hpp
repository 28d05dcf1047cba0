#pragma once

#include "mmflow/field.hpp"

#include <vector>

namespace mmflow::detail {

/// Perimeter-like term sum_e h^(dim-1) max_j <c_j, forward difference of
/// u(:, column) at e> over grid cells and the exterior layer.
struct TermGroup {
  int column = 0;
  Eigen::MatrixXd covectors;  // m x dim
  double exterior = 0;        // value of u(:, column) outside the grid
};

enum class Constraint { Box, Simplex };

/// min over feasible u of  sum_groups term(u) + <cost, u> + constant.
struct RelaxedProblem {
  Grid grid;
  int columns = 1;
  std::vector<TermGroup> groups;
  Eigen::MatrixXd cost;  // cells x columns, already scaled by h^dim
  Constraint constraint = Constraint::Box;
  std::vector<bool> free_column;  // frozen columns keep their start values
  Mask fixed_cell;                // rows kept at their start values
  Eigen::MatrixXd start;          // feasible warm start
  double constant = 0;
  /// Optional distance of each cell from the previous interface.  When set,
  /// the iteration first runs on the band {priority <= band} with the rest
  /// held at the start values, and widens the band until the duality gap of
  /// the full problem meets the tolerance.
  Eigen::VectorXd priority;
  double band = 0;
};

struct RelaxedResult {
  Eigen::MatrixXd u;
  double primal = 0;
  double dual = 0;
  double gap = 0;
  int iterations = 0;
  bool converged = false;
};

/// Diagonally preconditioned primal-dual iteration; each term is dualised
/// over the probability simplex of its covectors.  Stops once the duality
/// gap of the full problem is <= gap_tol * (1 + |primal|).
RelaxedResult solve_relaxation(const RelaxedProblem& problem, double gap_tol, int max_iters, int check_every = 50);

/// Objective value of a feasible u (including the constant).
double relaxed_objective(const RelaxedProblem& problem, const Eigen::MatrixXd& u);

}  // namespace mmflow::detail
