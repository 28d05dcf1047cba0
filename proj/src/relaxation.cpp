#include "relaxation.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"

namespace mmflow::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void project_simplex(double* v, int m) {
  double s[64];
  std::copy(v, v + m, s);
  std::sort(s, s + m, std::greater<>());
  double cum = 0;
  double theta = 0;
  for (int i = 0; i < m; ++i) {
    cum += s[i];
    const double t = (cum - 1) / (i + 1);
    if (s[i] - t > 0) theta = t;
  }
  for (int i = 0; i < m; ++i) v[i] = std::max(v[i] - theta, 0.0);
}

struct Group {
  int column = 0;
  int m = 0;
  double ext = 0;
  std::vector<double> c;  // row-major m x dim
  double row_abs = 0;     // max_j sum_k |c_jk| + |sum_k c_jk|
  double center_abs = 0;  // sum_j |sum_k c_jk|
  std::array<double, 3> side_abs{0, 0, 0};  // sum_j |c_jk|
};

// K u = h^(dim-1) <c_j, forward difference of u(:, column)> per extended
// cell, group and covector; dual variables live on per-block simplices.
// Loops run over a per-group list of extended cells.
class TermOperator {
 public:
  using Terms = std::vector<std::vector<Index>>;

  TermOperator(const Grid& g, const std::vector<TermGroup>& groups) : dim_(g.dim()), w_(g.facet_area()) {
    for_each_term(g, [&](const Coords& x) {
      std::array<Index, 4> a{-1, -1, -1, -1};
      a[0] = g.contains(x) ? g.index(x) : -1;
      for (int k = 0; k < dim_; ++k) {
        Coords y = x;
        ++y[std::size_t(k)];
        a[std::size_t(k + 1)] = g.contains(y) ? g.index(y) : -1;
      }
      nb_.push_back(a);
    });
    for (const auto& tg : groups) {
      Group gr;
      gr.column = tg.column;
      gr.m = int(tg.covectors.rows());
      gr.ext = tg.exterior;
      if (gr.m > 64) throw std::invalid_argument("relaxation: too many covectors in one term");
      for (int j = 0; j < gr.m; ++j) {
        double abs_sum = 0, sum = 0;
        for (int k = 0; k < dim_; ++k) {
          const double c = tg.covectors(j, k);
          gr.c.push_back(c);
          abs_sum += std::abs(c);
          sum += c;
          gr.side_abs[std::size_t(k)] += std::abs(c);
        }
        gr.row_abs = std::max(gr.row_abs, abs_sum + std::abs(sum));
        gr.center_abs += std::abs(sum);
      }
      groups_.push_back(std::move(gr));
    }
  }

  Index extended() const { return Index(nb_.size()); }
  const std::vector<Group>& groups() const { return groups_; }
  double weight() const { return w_; }

  Terms all_terms() const {
    std::vector<Index> every(nb_.size());
    for (std::size_t e = 0; e < nb_.size(); ++e) every[e] = Index(e);
    return Terms(groups_.size(), every);
  }

  // Terms touching at least one free entry; `free` is cells x columns.
  Terms active_terms(const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& free) const {
    Terms out(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const int col = groups_[gi].column;
      for (std::size_t e = 0; e < nb_.size(); ++e) {
        bool any = false;
        for (int k = 0; k <= dim_ && !any; ++k) {
          const Index i = nb_[e][std::size_t(k)];
          any = i >= 0 && free(i, col);
        }
        if (any) out[gi].push_back(Index(e));
      }
    }
    return out;
  }

  // Column sums of |K| per (cell, column).
  Eigen::MatrixXd column_abs(Index cells, int columns) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cells, columns);
    for (const auto& gr : groups_)
      for (const auto& a : nb_) {
        if (a[0] >= 0) out(a[0], gr.column) += w_ * gr.center_abs;
        for (int k = 0; k < dim_; ++k)
          if (a[std::size_t(k + 1)] >= 0) out(a[std::size_t(k + 1)], gr.column) += w_ * gr.side_abs[std::size_t(k)];
      }
    return out;
  }

  std::vector<std::vector<double>> initial_dual(const Eigen::MatrixXd& u) const {
    std::vector<std::vector<double>> mu(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const Group& gr = groups_[gi];
      auto& mg = mu[gi];
      mg.assign(std::size_t(extended() * gr.m), 1.0 / gr.m);
      for (Index e = 0; e < extended(); ++e) {
        double delta[3];
        if (!difference(u, gr, e, delta)) continue;
        int best = 0;
        double best_v = -kInf;
        for (int j = 0; j < gr.m; ++j) {
          const double s = dot(gr, j, delta);
          if (s > best_v) best_v = s, best = j;
        }
        for (int j = 0; j < gr.m; ++j) mg[std::size_t(e * gr.m + j)] = j == best ? 1.0 : 0.0;
      }
    }
    return mu;
  }

  // mu <- proj(mu + sigma_g K ubar), sigma_g per group.
  void dual_step(const Eigen::MatrixXd& ubar, const std::vector<double>& sigma, std::vector<std::vector<double>>& mu,
                 const Terms& terms) const {
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const Group& gr = groups_[gi];
      double* mg = mu[gi].data();
      const double step = sigma[gi] * w_;
      for (Index e : terms[gi]) {
        double delta[3];
        difference(ubar, gr, e, delta);
        double* me = mg + e * gr.m;
        for (int j = 0; j < gr.m; ++j) me[j] += step * dot(gr, j, delta);
        project_simplex(me, gr.m);
      }
    }
  }

  // grad += K^T mu; returns the constant part <mu, K 0>.
  double adjoint(const std::vector<std::vector<double>>& mu, Eigen::MatrixXd& grad, const Terms& terms) const {
    double beta = 0;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const Group& gr = groups_[gi];
      const double* mg = mu[gi].data();
      for (Index e : terms[gi]) {
        const auto& a = nb_[std::size_t(e)];
        const double* me = mg + e * gr.m;
        double v[3] = {0, 0, 0};
        for (int j = 0; j < gr.m; ++j) {
          if (me[j] == 0) continue;
          for (int k = 0; k < dim_; ++k) v[k] += me[j] * gr.c[std::size_t(j * dim_ + k)];
        }
        double vsum = 0;
        for (int k = 0; k < dim_; ++k) {
          v[k] *= w_;
          vsum += v[k];
          if (a[std::size_t(k + 1)] >= 0)
            grad(a[std::size_t(k + 1)], gr.column) += v[k];
          else
            beta += v[k] * gr.ext;
        }
        if (a[0] >= 0)
          grad(a[0], gr.column) -= vsum;
        else
          beta -= vsum * gr.ext;
      }
    }
    return beta;
  }

  // sum of h^(dim-1) max_j <c_j, delta>
  double value(const Eigen::MatrixXd& u, const Terms& terms) const {
    double total = 0;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const Group& gr = groups_[gi];
      double sum = 0;
      for (Index e : terms[gi]) {
        double delta[3];
        if (!difference(u, gr, e, delta)) continue;
        double best = -kInf;
        for (int j = 0; j < gr.m; ++j) best = std::max(best, dot(gr, j, delta));
        sum += best;
      }
      total += w_ * sum;
    }
    return total;
  }

 private:
  bool difference(const Eigen::MatrixXd& u, const Group& gr, Index e, double* delta) const {
    const auto& a = nb_[std::size_t(e)];
    const double v0 = a[0] >= 0 ? u(a[0], gr.column) : gr.ext;
    bool nonzero = false;
    for (int k = 0; k < dim_; ++k) {
      delta[k] = (a[std::size_t(k + 1)] >= 0 ? u(a[std::size_t(k + 1)], gr.column) : gr.ext) - v0;
      nonzero = nonzero || delta[k] != 0;
    }
    return nonzero;
  }

  double dot(const Group& gr, int j, const double* delta) const {
    double s = 0;
    for (int k = 0; k < dim_; ++k) s += gr.c[std::size_t(j * dim_ + k)] * delta[k];
    return s;
  }

  int dim_;
  double w_;
  std::vector<std::array<Index, 4>> nb_;
  std::vector<Group> groups_;
};

using FreeMap = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// min over u agreeing with `start` off `free` (box or simplex rows) of <grad, u>
double feasible_minimum(const RelaxedProblem& p, const Eigen::MatrixXd& grad, const FreeMap& free) {
  double total = 0;
  for (Index i = 0; i < grad.rows(); ++i) {
    double fixed = 0;
    double best = kInf;
    bool any = false;
    for (int c = 0; c < p.columns; ++c) {
      if (!free(i, c)) {
        fixed += grad(i, c) * p.start(i, c);
        continue;
      }
      any = true;
      if (p.constraint == Constraint::Simplex)
        best = std::min(best, grad(i, c));
      else
        fixed += std::min(0.0, grad(i, c));
    }
    total += fixed;
    if (any && p.constraint == Constraint::Simplex) total += best;
  }
  return total;
}

FreeMap base_free(const RelaxedProblem& p) {
  FreeMap f(p.grid.cells(), p.columns);
  for (Index i = 0; i < p.grid.cells(); ++i)
    for (int c = 0; c < p.columns; ++c) f(i, c) = !p.fixed_cell[i] && p.free_column[std::size_t(c)];
  return f;
}

}  // namespace

double relaxed_objective(const RelaxedProblem& p, const Eigen::MatrixXd& u) {
  const TermOperator op(p.grid, p.groups);
  return op.value(u, op.all_terms()) + (p.cost.array() * u.array()).sum() + p.constant;
}

RelaxedResult solve_relaxation(const RelaxedProblem& p, double gap_tol, int max_iters, int check_every) {
  const Index cells = p.grid.cells();
  const TermOperator op(p.grid, p.groups);
  const auto all = op.all_terms();
  const FreeMap full_free = base_free(p);
  const bool banded = p.priority.size() == cells;

  std::vector<double> sigma;
  for (const auto& gr : op.groups()) sigma.push_back(gr.row_abs > 0 ? 1.0 / (op.weight() * gr.row_abs) : 0.0);
  const Eigen::MatrixXd colsum = op.column_abs(cells, p.columns);
  Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(cells, p.columns);
  for (Index i = 0; i < cells; ++i) {
    double row_tau = kInf;
    for (int c = 0; c < p.columns; ++c) {
      if (!full_free(i, c)) continue;
      tau(i, c) = colsum(i, c) > 0 ? 1.0 / colsum(i, c) : 1.0;
      row_tau = std::min(row_tau, tau(i, c));
    }
    if (p.constraint == Constraint::Simplex)
      for (int c = 0; c < p.columns; ++c)
        if (full_free(i, c)) tau(i, c) = row_tau;
  }

  Eigen::MatrixXd u = p.start;
  Eigen::MatrixXd ubar = u;
  Eigen::MatrixXd prev(cells, p.columns);
  Eigen::MatrixXd grad(cells, p.columns);
  auto mu = op.initial_dual(u);

  RelaxedResult res;
  res.u = u;
  res.primal = relaxed_objective(p, u);
  res.dual = -kInf;
  res.gap = kInf;

  double band = p.band;
  int it = 0;
  while (true) {
    FreeMap free = full_free;
    bool whole = true;
    if (banded) {
      for (Index i = 0; i < cells; ++i)
        if (!(p.priority[i] <= band)) free.row(i).setConstant(false);
      whole = (free == full_free).all();
    }
    const auto active = op.active_terms(free);
    std::vector<Index> free_cells;
    for (Index i = 0; i < cells; ++i)
      if (free.row(i).any()) free_cells.push_back(i);
    std::vector<int> free_cols;
    for (int c = 0; c < p.columns; ++c)
      if (p.free_column[std::size_t(c)]) free_cols.push_back(c);
    // terms outside the active set are constant while the band is fixed
    double inactive = 0;
    {
      TermOperator::Terms rest(op.groups().size());
      for (std::size_t gi = 0; gi < rest.size(); ++gi) {
        std::vector<bool> on(std::size_t(op.extended()), false);
        for (Index e : active[gi]) on[std::size_t(e)] = true;
        for (Index e = 0; e < op.extended(); ++e)
          if (!on[std::size_t(e)]) rest[gi].push_back(e);
      }
      inactive = op.value(u, rest);
    }
    double band_dual = -kInf;
    bool band_done = false;

    while (it < max_iters) {
      ++it;
      op.dual_step(ubar, sigma, mu, active);
      grad = p.cost;
      const double beta = op.adjoint(mu, grad, active);
      const bool check = it % check_every == 0 || it == max_iters;
      if (check) band_dual = std::max(band_dual, beta + inactive + p.constant + feasible_minimum(p, grad, free));

      prev = u;
      for (Index i : free_cells) {
        for (int c : free_cols) u(i, c) -= tau(i, c) * grad(i, c);
        if (p.constraint == Constraint::Simplex) {
          double v[64];
          const int m = int(free_cols.size());
          for (int j = 0; j < m; ++j) v[j] = u(i, free_cols[std::size_t(j)]);
          project_simplex(v, m);
          for (int j = 0; j < m; ++j) u(i, free_cols[std::size_t(j)]) = v[j];
        } else {
          for (int c : free_cols) u(i, c) = std::clamp(u(i, c), 0.0, 1.0);
        }
      }
      ubar = 2 * u - prev;

      if (check) {
        const double primal = op.value(u, active) + inactive + (p.cost.array() * u.array()).sum() + p.constant;
        if (primal <= res.primal) {
          res.primal = primal;
          res.u = u;
        }
        if (res.primal - band_dual <= gap_tol * (1 + std::abs(res.primal))) {
          band_done = true;
          break;
        }
      }
    }
    res.iterations = it;

    // duality gap of the full problem; the frozen part of mu is the
    // subgradient at the start point
    grad = p.cost;
    const double beta = op.adjoint(mu, grad, all);
    res.dual = std::max(res.dual, beta + p.constant + feasible_minimum(p, grad, full_free));
    if (whole) res.dual = std::max(res.dual, band_dual);
    res.gap = std::max(0.0, res.primal - res.dual);
    if (res.gap <= gap_tol * (1 + std::abs(res.primal))) {
      res.converged = true;
      return res;
    }
    if (!band_done || whole || it >= max_iters) return res;
    band *= 2;
    u = res.u;
    ubar = u;
  }
}

}  // namespace mmflow::detail
