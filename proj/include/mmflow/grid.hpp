#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mmflow {

using Index = std::int64_t;
using Coords = std::array<int, 3>;

/// Uniform cell-centred grid of a box centred at the origin. Unused axes of a
/// 2D grid have extent 1 so the index arithmetic is dimension-agnostic.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, std::vector<int> shape, double h) : dim_(dim), h_(h) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("grid: dim must be 2 or 3");
    if (int(shape.size()) != dim) throw std::invalid_argument("grid: shape length must equal dim");
    if (!(h > 0)) throw std::invalid_argument("grid: spacing h must be positive");
    shape_ = {1, 1, 1};
    for (int k = 0; k < dim; ++k) {
      if (shape[std::size_t(k)] < 2) throw std::invalid_argument("grid: every axis needs at least 2 cells");
      shape_[std::size_t(k)] = shape[std::size_t(k)];
    }
    strides_ = {Index(shape_[1]) * shape_[2], Index(shape_[2]), 1};
  }

  /// Square/cubic grid of `n` cells per axis covering a box of side `side`.
  static Grid cube(int dim, int n, double side = 1.0) {
    return Grid(dim, std::vector<int>(std::size_t(dim), n), side / n);
  }

  int dim() const { return dim_; }
  double h() const { return h_; }
  int extent(int axis) const { return shape_[std::size_t(axis)]; }
  std::vector<int> shape() const { return {shape_.begin(), shape_.begin() + dim_}; }
  Index cells() const { return Index(shape_[0]) * shape_[1] * shape_[2]; }
  Index stride(int axis) const { return strides_[std::size_t(axis)]; }
  /// Volume of one cell, h^dim.
  double cell_volume() const { return dim_ == 2 ? h_ * h_ : h_ * h_ * h_; }
  /// Area of one facet, h^(dim-1).
  double facet_area() const { return dim_ == 2 ? h_ : h_ * h_; }

  Eigen::VectorXd origin() const {
    Eigen::VectorXd o(dim_);
    for (int k = 0; k < dim_; ++k) o[k] = -0.5 * h_ * shape_[std::size_t(k)];
    return o;
  }

  Coords coords(Index i) const {
    Coords c{0, 0, 0};
    c[0] = int(i / strides_[0]);
    i -= Index(c[0]) * strides_[0];
    c[1] = int(i / strides_[1]);
    c[2] = int(i - Index(c[1]) * strides_[1]);
    return c;
  }

  Index index(const Coords& c) const { return c[0] * strides_[0] + c[1] * strides_[1] + c[2]; }

  bool contains(const Coords& c) const {
    for (int k = 0; k < 3; ++k)
      if (c[std::size_t(k)] < 0 || c[std::size_t(k)] >= shape_[std::size_t(k)]) return false;
    return true;
  }

  /// Position of a (possibly out-of-grid) cell centre.
  Eigen::VectorXd center(const Coords& c) const {
    Eigen::VectorXd x(dim_);
    for (int k = 0; k < dim_; ++k) x[k] = h_ * (c[std::size_t(k)] + 0.5 - 0.5 * shape_[std::size_t(k)]);
    return x;
  }
  Eigen::VectorXd center(Index i) const { return center(coords(i)); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dim_ == b.dim_ && a.shape_ == b.shape_ && a.h_ == b.h_;
  }

 private:
  int dim_ = 2;
  std::array<int, 3> shape_{2, 2, 1};
  std::array<Index, 3> strides_{2, 1, 1};
  double h_ = 1;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

/// Primitive integer offsets with max-norm <= 2: the 16-neighbourhood in 2D,
/// its 98-offset analogue in 3D.
std::vector<Coords> wide_stencil(int dim);

}  // namespace mmflow
