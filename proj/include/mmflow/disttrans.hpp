#pragma once

#include "mmflow/field.hpp"

#include <limits>

namespace mmflow {

/// How cells outside the grid are read when locating a mask's boundary.
enum class Exterior { Outside, Inside };

/// Signed psi-distance to the boundary of a mask, negative inside.  When the
/// mask has no boundary every value is +inf (empty) or -inf (everything).
struct SignedDistanceField {
  Grid grid;
  Eigen::VectorXd values;
  bool empty_boundary = false;

  double operator[](Index i) const { return values[i]; }
};

/// Dijkstra over the wide stencil with edge cost psi(offset * h).  Outside
/// the mask the value is min over mask cells a of dist(a, x) - s0, with
/// s0 = half the cheapest stencil edge; inside it is the same quantity for
/// the complement, negated.  Exactly monotone under inclusion and exactly
/// antisymmetric under complement.
SignedDistanceField signed_dist(const Mask& mask, const Norm& mobility, const Grid& grid,
                                Exterior exterior = Exterior::Outside);

/// signed_dist of phase `phase` (1-based), with the exterior convention that
/// phase N+1 owns everything outside the grid.
SignedDistanceField phase_signed_dist(const LabelField& partition, int phase, const Norm& mobility);

/// One signed distance per phase of `partition`.
std::vector<SignedDistanceField> phase_distances(const LabelField& partition, const NormFamily& mobilities);

/// sum_i sum_{x in A_i delta B_i} h^dim |sdist_psi_i(x, dB_i)|, where B = prev
/// and A = candidate; +inf if some dB_i is empty while A_i delta B_i is not.
double dissipation(const LabelField& prev, const LabelField& candidate, const NormFamily& mobilities);
double dissipation(const LabelField& prev, const LabelField& candidate,
                   const std::vector<SignedDistanceField>& prev_distances);

}  // namespace mmflow
