#pragma once

// Reference basis pursuit solver for small noiseless instances:
//
//   min ||s||_1  s.t.  A s = y
//
// written as the LP  min 1^T (u + v)  s.t.  A u - A v = y,  u, v >= 0
// and solved with a dense two-phase tableau simplex under Bland's rule.
// Independent of the proximal solver; used to check it.

#include <cmath>
#include <limits>
#include <vector>

#include "mldpcs/numeric.hpp"

namespace mldpcs {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  Vector s;
  double objective = 0.0;
  LpStatus status = LpStatus::optimal;
  int pivots = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(Index rows, Index cols) : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  Matrix& data() { return t_; }
  std::vector<Index>& basis() { return basis_; }
  Index rows() const { return t_.rows() - 1; }
  Index cols() const { return t_.cols() - 1; }
  double rhs(Index r) const { return t_(r, cols()); }

  void pivot(Index row, Index col) {
    t_.row(row) /= t_(row, col);
    for (Index r = 0; r <= rows(); ++r) {
      if (r == row) continue;
      const double f = t_(r, col);
      if (f != 0.0) t_.row(r) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Minimizes the objective held in the last row (reduced costs, with the
  // negated objective value in the corner). Columns >= allowed are frozen.
  LpStatus run(Index allowed, double eps, int max_pivots, int& pivots) {
    const Index obj = rows();
    while (pivots < max_pivots) {
      Index enter = -1;
      for (Index c = 0; c < allowed; ++c) {
        if (t_(obj, c) < -eps) {
          enter = c;  // Bland: lowest index with negative reduced cost
          break;
        }
      }
      if (enter < 0) return LpStatus::optimal;
      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index r = 0; r < obj; ++r) {
        const double a = t_(r, enter);
        if (a <= eps) continue;
        const double ratio = rhs(r) / a;
        if (ratio < best - 1e-15 ||
            (leave >= 0 && std::abs(ratio - best) <= 1e-15 && basis_[static_cast<std::size_t>(r)] <
                                                     basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      pivot(leave, enter);
      ++pivots;
    }
    return LpStatus::iteration_limit;
  }

 private:
  Matrix t_;
  std::vector<Index> basis_;
};

}  // namespace detail

inline LpResult oracle_bp_lp(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Vector>& y,
                             double pivot_tol = 1e-9, int max_pivots = 100000) {
  require_same_dim(y.size(), A.rows(), "oracle_bp_lp data");
  const Index m = A.rows();
  const Index n = A.cols();
  const Index nvar = 2 * n;  // u then v
  detail::Tableau tab(m, nvar + m);
  Matrix& t = tab.data();
  for (Index i = 0; i < m; ++i) {
    const double flip = y[i] < 0.0 ? -1.0 : 1.0;
    t.row(i).segment(0, n) = flip * A.row(i);
    t.row(i).segment(n, n) = -flip * A.row(i);
    t(i, nvar + i) = 1.0;
    t(i, nvar + m) = flip * y[i];
    tab.basis()[static_cast<std::size_t>(i)] = nvar + i;
  }

  LpResult out;
  // Phase 1: minimize the sum of artificials.
  for (Index i = 0; i < m; ++i) t.row(m) -= t.row(i);
  for (Index i = 0; i < m; ++i) t(m, nvar + i) = 0.0;
  auto status = tab.run(nvar, pivot_tol, max_pivots, out.pivots);
  if (status == LpStatus::iteration_limit) {
    out.status = status;
    return out;
  }
  if (-t(m, nvar + m) > 1e-7 * std::max(1.0, y.lpNorm<1>())) {
    out.status = LpStatus::infeasible;
    return out;
  }
  // Drive zero-level artificials out of the basis where possible.
  for (Index r = 0; r < m; ++r) {
    if (tab.basis()[static_cast<std::size_t>(r)] < nvar) continue;
    for (Index c = 0; c < nvar; ++c) {
      if (std::abs(t(r, c)) > pivot_tol) {
        tab.pivot(r, c);
        break;
      }
    }
  }

  // Phase 2: cost 1 on every structural variable.
  t.row(m).setZero();
  t.row(m).segment(0, nvar).setOnes();
  for (Index r = 0; r < m; ++r) {
    const Index b = tab.basis()[static_cast<std::size_t>(r)];
    if (b < nvar) t.row(m) -= t.row(r);
  }
  status = tab.run(nvar, pivot_tol, max_pivots, out.pivots);
  out.status = status;
  if (status != LpStatus::optimal) return out;

  Vector uv = Vector::Zero(nvar);
  for (Index r = 0; r < m; ++r) {
    const Index b = tab.basis()[static_cast<std::size_t>(r)];
    if (b < nvar) uv[b] = tab.rhs(r);
  }
  out.s = uv.head(n) - uv.tail(n);
  out.objective = out.s.lpNorm<1>();
  return out;
}

}  // namespace mldpcs
