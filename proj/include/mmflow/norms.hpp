#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmflow {

enum class NormKind { Euclidean, DiagonalWeighted, Polyhedral };

inline const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::Euclidean: return "euclidean";
    case NormKind::DiagonalWeighted: return "diagonal";
    case NormKind::Polyhedral: return "polyhedral";
  }
  return "?";
}

/// A norm on R^n from one of three closed-form families.
///
/// - euclidean:  |v|
/// - diagonal:   |W v| with W = diag(weights), weights > 0
/// - polyhedral: max_j <a_j, v> over a centrally symmetric list of covectors
///
/// Every family has an exact dual norm and exact unit-ball geometry, which
/// the distance transforms, the constants and the Wulff sampling rely on.
template <typename Scalar>
class BasicNorm {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicNorm() = default;

  static BasicNorm euclidean(int dim, std::string label = "euclidean") {
    if (dim < 1) throw std::invalid_argument("norm: dimension must be positive");
    BasicNorm n;
    n.kind_ = NormKind::Euclidean;
    n.dim_ = dim;
    n.label_ = std::move(label);
    return n;
  }

  static BasicNorm diagonal(Vector weights, std::string label = "diagonal") {
    if (weights.size() < 1) throw std::invalid_argument("norm: diagonal weights must be non-empty");
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > Scalar(0)) || !std::isfinite(double(weights[i])))
        throw std::invalid_argument("norm: diagonal weights must be finite and positive");
    }
    BasicNorm n;
    n.kind_ = NormKind::DiagonalWeighted;
    n.dim_ = int(weights.size());
    n.weights_ = std::move(weights);
    n.label_ = std::move(label);
    return n;
  }

  /// Rows of `covectors` are the a_j. The list must be non-empty, centrally
  /// symmetric and span R^n (otherwise the gauge is not a norm).
  static BasicNorm polyhedral(Matrix covectors, std::string label = "polyhedral") {
    if (covectors.rows() == 0 || covectors.cols() == 0)
      throw std::invalid_argument("norm: polyhedral covector list is empty");
    const Scalar tol = Scalar(1e-12) * std::max<Scalar>(Scalar(1), covectors.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < covectors.rows(); ++i) {
      if (!covectors.row(i).allFinite())
        throw std::invalid_argument("norm: polyhedral covectors must be finite");
      bool mirrored = false;
      for (Eigen::Index j = 0; j < covectors.rows() && !mirrored; ++j)
        mirrored = (covectors.row(i) + covectors.row(j)).cwiseAbs().maxCoeff() <= tol;
      if (!mirrored)
        throw std::invalid_argument("norm: polyhedral covector list is not centrally symmetric");
    }
    Eigen::FullPivLU<Matrix> lu(covectors);
    if (lu.rank() < covectors.cols())
      throw std::invalid_argument("norm: polyhedral covectors do not span R^n (unbounded unit ball)");
    BasicNorm n;
    n.kind_ = NormKind::Polyhedral;
    n.dim_ = int(covectors.cols());
    n.covectors_ = std::move(covectors);
    n.label_ = std::move(label);
    n.vertices_ = unit_ball_vertices(n.covectors_);
    return n;
  }

  NormKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::string& label() const { return label_; }
  const Vector& weights() const { return weights_; }
  const Matrix& covectors() const { return covectors_; }
  /// Vertices of {v : phi(v) <= 1}; polyhedral norms only.
  const Matrix& vertices() const { return vertices_; }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& v) const {
    switch (kind_) {
      case NormKind::Euclidean: return v.norm();
      case NormKind::DiagonalWeighted: return v.cwiseProduct(weights_).norm();
      case NormKind::Polyhedral: return (covectors_ * v).maxCoeff();
    }
    return Scalar(0);
  }

  /// phi°(xi) = sup { <xi, v> : phi(v) <= 1 }.
  template <typename Derived>
  Scalar dual(const Eigen::MatrixBase<Derived>& xi) const {
    switch (kind_) {
      case NormKind::Euclidean: return xi.norm();
      case NormKind::DiagonalWeighted: return xi.cwiseQuotient(weights_).norm();
      case NormKind::Polyhedral: return (vertices_ * xi).maxCoeff();
    }
    return Scalar(0);
  }

  /// s * phi, for s > 0.
  BasicNorm scaled(Scalar s) const {
    if (!(s > Scalar(0))) throw std::invalid_argument("norm: scale must be positive");
    switch (kind_) {
      case NormKind::Euclidean:
        return diagonal(Vector::Constant(dim_, s), label_);
      case NormKind::DiagonalWeighted:
        return diagonal(weights_ * s, label_);
      case NormKind::Polyhedral:
        return polyhedral(covectors_ * s, label_);
    }
    return *this;
  }

  /// Exact min of phi on the euclidean unit sphere.
  Scalar sphere_min() const {
    switch (kind_) {
      case NormKind::Euclidean: return Scalar(1);
      case NormKind::DiagonalWeighted: return weights_.minCoeff();
      case NormKind::Polyhedral: return Scalar(1) / vertices_.rowwise().norm().maxCoeff();
    }
    return Scalar(0);
  }

  /// Exact max of phi on the euclidean unit sphere.
  Scalar sphere_max() const {
    switch (kind_) {
      case NormKind::Euclidean: return Scalar(1);
      case NormKind::DiagonalWeighted: return weights_.maxCoeff();
      case NormKind::Polyhedral: return covectors_.rowwise().norm().maxCoeff();
    }
    return Scalar(0);
  }

  /// Squared axis weights when phi(v)^2 is a diagonal quadratic form.
  bool is_quadratic() const { return kind_ != NormKind::Polyhedral; }
  Vector quadratic_weights() const {
    if (kind_ == NormKind::Euclidean) return Vector::Ones(dim_);
    return weights_.cwiseAbs2();
  }

  friend bool operator==(const BasicNorm& a, const BasicNorm& b) {
    if (a.kind_ != b.kind_ || a.dim_ != b.dim_) return false;
    switch (a.kind_) {
      case NormKind::Euclidean: return true;
      case NormKind::DiagonalWeighted: return a.weights_ == b.weights_;
      case NormKind::Polyhedral:
        return a.covectors_.rows() == b.covectors_.rows() && a.covectors_ == b.covectors_;
    }
    return false;
  }

 private:
  static Matrix unit_ball_vertices(const Matrix& a) {
    const int d = int(a.cols());
    const int m = int(a.rows());
    std::vector<Vector> found;
    std::vector<int> pick(d);
    // enumerate d-subsets of the facet normals
    for (int i = 0; i < d; ++i) pick[i] = i;
    const Scalar feas = Scalar(1e-10);
    while (true) {
      Matrix sub(d, d);
      for (int i = 0; i < d; ++i) sub.row(i) = a.row(pick[i]);
      Eigen::FullPivLU<Matrix> lu(sub);
      if (lu.isInvertible()) {
        Vector v = lu.solve(Vector::Ones(d));
        if ((a * v).maxCoeff() <= Scalar(1) + feas) {
          bool dup = false;
          for (const auto& w : found) dup = dup || (w - v).cwiseAbs().maxCoeff() <= feas;
          if (!dup) found.push_back(v);
        }
      }
      int k = d - 1;
      while (k >= 0 && pick[k] == m - d + k) --k;
      if (k < 0) break;
      ++pick[k];
      for (int i = k + 1; i < d; ++i) pick[i] = pick[i - 1] + 1;
    }
    Matrix out(Eigen::Index(found.size()), d);
    for (std::size_t i = 0; i < found.size(); ++i) out.row(Eigen::Index(i)) = found[i].transpose();
    return out;
  }

  NormKind kind_ = NormKind::Euclidean;
  int dim_ = 2;
  std::string label_ = "euclidean";
  Vector weights_;
  Matrix covectors_;
  Matrix vertices_;
};

using Norm = BasicNorm<double>;
using Vec = Eigen::VectorXd;

template <typename Scalar, typename Derived>
Scalar eval(const BasicNorm<Scalar>& norm, const Eigen::MatrixBase<Derived>& v) {
  return norm(v);
}

template <typename Scalar, typename Derived>
Scalar dual_eval(const BasicNorm<Scalar>& norm, const Eigen::MatrixBase<Derived>& xi) {
  return norm.dual(xi);
}

enum class FamilyRole { Anisotropies, Mobilities };

/// Phi = {phi_1..phi_{N+1}} or Psi = {psi_1..psi_{N+1}}.
struct NormFamily {
  std::vector<Norm> members;
  FamilyRole role = FamilyRole::Anisotropies;

  NormFamily() = default;
  NormFamily(std::vector<Norm> m, FamilyRole r) : members(std::move(m)), role(r) { validate(); }

  /// Uniform family {phi, ..., phi} of the given length.
  static NormFamily uniform(const Norm& n, int length, FamilyRole r) {
    return NormFamily(std::vector<Norm>(std::size_t(length), n), r);
  }

  void validate() const {
    if (members.size() < 2) throw std::invalid_argument("norm family: needs at least two members");
    for (const auto& m : members)
      if (m.dim() != members.front().dim())
        throw std::invalid_argument("norm family: members have different dimensions");
  }

  int size() const { return int(members.size()); }
  int dim() const { return members.front().dim(); }
  const Norm& operator[](int i) const { return members[std::size_t(i)]; }
  bool all_equal() const {
    return std::all_of(members.begin(), members.end(),
                       [&](const Norm& n) { return n == members.front(); });
  }
};

struct FamilyBounds {
  double c_lower = 0;
  double c_upper = 0;
  double kappa = 0;
};

/// Nested direction samples on the unit sphere: the first `count` points of a
/// fixed sequence, so a larger count always contains a smaller one.
std::vector<Vec> sphere_samples(int dim, int count);

/// sup over the unit sphere of |a(v) - b(v)|.
double sup_difference(const Norm& a, const Norm& b, int samples);

FamilyBounds family_bounds(const NormFamily& family, int samples);

struct ConditionCheck {
  bool holds = false;
  double margin = 0;
};

/// kappa < 2 c_lower / N.
ConditionCheck check_multiphase_condition(const FamilyBounds& bounds, int bounded_phases);

/// k points of {phi = 1} in 2D, ordered by angle starting on the +x axis.
std::vector<Eigen::Vector2d> wulff_boundary(const Norm& norm, int k);

}  // namespace mmflow
