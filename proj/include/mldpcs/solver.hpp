#pragma once

// Basis pursuit denoising,
//
//   min ||s||_1  s.t.  ||y - A s||_2 <= delta,
//
// solved through its Lagrangian form, the LASSO
//
//   min 1/2 ||y - A s||_2^2 + lambda ||s||_1,
//
// with an outer root-finder on lambda. The LASSO residual is monotone in
// lambda, so a bracket [lambda_min, lambda_max] with lambda_max = ||A^T y||_inf
// (where the solution is zero) contains the multiplier for every achievable
// radius. Inner solves use FISTA with function-value restarts. Whenever the
// iterate's support looks settled, the LASSO optimum restricted to that
// support and sign pattern is computed in closed form and accepted if it
// satisfies the full optimality conditions; the same closed form yields the
// exact multiplier for the current support, which the outer loop uses as a
// safeguarded step inside the bisection bracket.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mldpcs/numeric.hpp"

namespace mldpcs {

struct SolverConfig {
  int max_outer_iters = 100;
  int max_inner_iters = 20000;
  double constraint_tol = 1e-6;  // relative to max(1, delta)
  double l1_opt_tol = 1e-6;      // relative objective change
  double lambda_min_ratio = 1e-10;
  std::optional<std::pair<double, double>> lambda_bracket;  // (min, max) override
  int power_iters = 200;
  double power_tol = 1e-10;
  int polish_every = 20;
};

/// Sensing operator with its cached Lipschitz constant ||A||_2^2.
struct SparseOperator {
  Matrix A;
  double lipschitz = 0.0;

  SparseOperator() = default;
  explicit SparseOperator(Matrix a, const SolverConfig& config = {}) : A(std::move(a)) {
    require(A.size() > 0 && A.allFinite(), Errc::invalid_dimension,
            "sensing operator must be nonempty and finite");
    const double sigma = spectral_norm_power(A, config.power_iters, config.power_tol);
    lipschitz = sigma * sigma;
  }

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }
};

struct BpdnProblem {
  Matrix A;
  Vector y;
  double delta = 0.0;
};

struct LassoResult {
  Vector s;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool exact = false;  // closed-form support solve passed the optimality check
};

struct SolverCertificate {
  Vector solution;
  double residual_norm = 0.0;
  double l1_norm = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  double kkt_violation = 0.0;
  bool converged = false;
  bool monotone = true;  // residual non-decreasing in lambda along the trajectory
  int outer_iterations = 0;
  int inner_iterations = 0;
};

inline Vector soft_threshold(const Eigen::Ref<const Vector>& v, double t) {
  return v.unaryExpr([t](double x) {
    const double mag = std::abs(x) - t;
    return mag > 0.0 ? sign_of(x) * mag : 0.0;
  });
}

inline double lasso_objective(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Vector>& y,
                              const Eigen::Ref<const Vector>& s, double lambda) {
  return 0.5 * (y - A * s).squaredNorm() + lambda * s.lpNorm<1>();
}

/// Optimality violation of s for the BPDN problem with multiplier lambda:
/// stationarity on and off the support plus the constraint gap, scaled by
/// 1 / max(1, lambda). A zero solution strictly inside the ball is optimal
/// and reports 0.
inline double kkt_check(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Vector>& y,
                        double delta, const Eigen::Ref<const Vector>& s, double lambda) {
  const Vector r = y - A * s;
  const double rnorm = r.norm();
  if ((s.array() == 0.0).all() && rnorm <= delta) return 0.0;
  const Vector g = -(A.transpose() * r);
  double worst = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    const double v = s[i] != 0.0 ? std::abs(g[i] + lambda * sign_of(s[i]))
                                 : std::max(0.0, std::abs(g[i]) - lambda);
    worst = std::max(worst, v);
  }
  worst = std::max(worst, std::abs(rnorm - delta));
  return worst / std::max(1.0, lambda);
}

inline double kkt_check(const BpdnProblem& p, const Eigen::Ref<const Vector>& s, double lambda) {
  return kkt_check(p.A, p.y, p.delta, s, lambda);
}

namespace detail {

// LASSO solution restricted to the support/sign pattern of `s`:
// u(lambda) = u0 - lambda * v with u0 = A_S^+ y and v = (A_S^T A_S)^{-1} sgn.
struct SupportSolve {
  bool valid = false;  // KKT conditions hold for the full problem at lambda
  Vector s;
  double r0_sq = 0.0;  // ||y - A_S u0||^2
  double q_sq = 0.0;   // ||A_S v||^2
};

inline SupportSolve solve_on_support(const Matrix& A, const Vector& y, double lambda,
                                     const Vector& s) {
  SupportSolve out;
  std::vector<Index> support;
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] != 0.0) support.push_back(i);
  const auto k = static_cast<Index>(support.size());
  if (k == 0) {
    out.valid = (A.transpose() * y).lpNorm<Eigen::Infinity>() <= lambda * (1.0 + 1e-12);
    out.s = Vector::Zero(s.size());
    return out;
  }
  if (k > A.rows()) return out;

  Matrix as(A.rows(), k);
  Vector sgn(k);
  for (Index j = 0; j < k; ++j) {
    as.col(j) = A.col(support[static_cast<std::size_t>(j)]);
    sgn[j] = sign_of(s[support[static_cast<std::size_t>(j)]]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(as);
  qr.setThreshold(1e-12);
  if (qr.rank() < k) return out;
  const Vector u0 = qr.solve(y);
  const Matrix gram = as.transpose() * as;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return out;
  const Vector v = ldlt.solve(sgn);
  const Vector u = u0 - lambda * v;
  out.r0_sq = (y - as * u0).squaredNorm();
  out.q_sq = (as * v).squaredNorm();
  for (Index j = 0; j < k; ++j)
    if (u[j] == 0.0 || sign_of(u[j]) != sgn[j]) return out;

  out.s = Vector::Zero(s.size());
  for (Index j = 0; j < k; ++j) out.s[support[static_cast<std::size_t>(j)]] = u[j];
  const Vector corr = A.transpose() * (y - as * u);
  const double limit = lambda * (1.0 + 1e-9) + 1e-14 * std::max(1.0, corr.lpNorm<Eigen::Infinity>());
  std::vector<bool> on(static_cast<std::size_t>(s.size()), false);
  for (Index i : support) on[static_cast<std::size_t>(i)] = true;
  for (Index i = 0; i < s.size(); ++i)
    if (!on[static_cast<std::size_t>(i)] && std::abs(corr[i]) > limit) return out;
  out.valid = true;
  return out;
}

}  // namespace detail

namespace detail {

struct LassoRun {
  LassoResult result;
  SupportSolve support;  // last closed-form solve (valid when result.exact)
};

inline LassoRun run_lasso(const SparseOperator& op, const Vector& y, double lambda,
                          const SolverConfig& config, const Vector* warm) {
  const Matrix& A = op.A;
  const Index n = A.cols();
  LassoRun run;
  LassoResult& res = run.result;

  if ((A.transpose() * y).lpNorm<Eigen::Infinity>() <= lambda) {
    res.s = Vector::Zero(n);
    res.objective = 0.5 * y.squaredNorm();
    res.converged = res.exact = true;
    run.support.valid = true;
    run.support.s = res.s;
    return run;
  }

  Vector s = warm != nullptr ? *warm : Vector::Zero(n);
  if (warm != nullptr && (s.array() != 0.0).any()) {
    auto ss = solve_on_support(A, y, lambda, s);
    if (ss.valid) {
      res.s = ss.s;
      res.objective = lasso_objective(A, y, res.s, lambda);
      res.converged = res.exact = true;
      run.support = std::move(ss);
      return run;
    }
  }

  // Power iteration approaches ||A||^2 from below; a small margin keeps 1/L a descent step.
  const double L = op.lipschitz > 0.0 ? op.lipschitz * (1.0 + 1e-6) : 1.0;
  Vector z = s;
  double t = 1.0;
  double f = lasso_objective(A, y, s, lambda);
  const int window = 10;
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(config.max_inner_iters) + 1);
  history.push_back(f);

  for (int it = 1; it <= config.max_inner_iters; ++it) {
    res.iterations = it;
    const Vector grad = A.transpose() * (A * z - y);
    Vector next = soft_threshold(z - grad / L, lambda / L);
    const double f_next = lasso_objective(A, y, next, lambda);
    if (f_next > f) {
      if (t == 1.0) {
        // A plain proximal step from the accepted iterate cannot decrease f:
        // s is a fixed point up to rounding.
        auto ss = solve_on_support(A, y, lambda, s);
        if (ss.valid) {
          res.s = ss.s;
          res.objective = lasso_objective(A, y, res.s, lambda);
          res.exact = true;
          run.support = std::move(ss);
        } else {
          res.s = s;
          res.objective = f;
        }
        res.converged = true;
        return run;
      }
      // Momentum overshoot: restart from the last accepted iterate.
      z = s;
      t = 1.0;
      history.push_back(f);
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - s);
    s = std::move(next);
    f = f_next;
    t = t_next;
    history.push_back(f);

    const bool settle = history.size() > static_cast<std::size_t>(window) &&
                        (history[history.size() - 1 - window] - f) <=
                            config.l1_opt_tol * std::max(f, std::numeric_limits<double>::min());
    if (settle || it % config.polish_every == 0) {
      auto ss = solve_on_support(A, y, lambda, s);
      if (ss.valid) {
        res.s = ss.s;
        res.objective = lasso_objective(A, y, res.s, lambda);
        res.converged = res.exact = true;
        run.support = std::move(ss);
        return run;
      }
    }
    if (settle) {
      res.converged = true;
      break;
    }
  }
  res.s = std::move(s);
  res.objective = f;
  return run;
}

}  // namespace detail

/// Approximate argmin of 1/2 ||y - A s||^2 + lambda ||s||_1. Returns the
/// final iterate flagged not-converged when the iteration cap is hit.
inline LassoResult solve_lasso(const SparseOperator& op, const Eigen::Ref<const Vector>& y,
                               double lambda, const SolverConfig& config = {},
                               const Vector* warm_start = nullptr) {
  require(lambda > 0.0 && std::isfinite(lambda), Errc::invalid_config, "lambda must be > 0");
  require_same_dim(y.size(), op.rows(), "solve_lasso data");
  if (warm_start != nullptr) require_same_dim(warm_start->size(), op.cols(), "warm start");
  return detail::run_lasso(op, Vector(y), lambda, config, warm_start).result;
}

inline LassoResult solve_lasso(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Vector>& y,
                               double lambda, const SolverConfig& config = {}) {
  return solve_lasso(SparseOperator(Matrix(A), config), y, lambda, config);
}

/// Basis pursuit denoising through lambda root-finding on the LASSO residual.
inline SolverCertificate solve_bpdn(const SparseOperator& op, const Eigen::Ref<const Vector>& y_in,
                                    double delta, const SolverConfig& config = {}) {
  require(delta >= 0.0 && std::isfinite(delta), Errc::invalid_config, "delta must be >= 0");
  require_same_dim(y_in.size(), op.rows(), "solve_bpdn data");
  const Vector y = y_in;
  const Matrix& A = op.A;
  const Index n = A.cols();

  SolverCertificate cert;
  cert.delta = delta;
  const double ynorm = y.norm();
  const double lambda_max = (A.transpose() * y).lpNorm<Eigen::Infinity>();

  auto finish = [&](Vector s, double lambda, bool converged) {
    cert.solution = std::move(s);
    cert.lambda = lambda;
    cert.residual_norm = (y - A * cert.solution).norm();
    cert.l1_norm = cert.solution.lpNorm<1>();
    cert.kkt_violation = kkt_check(A, y, delta, cert.solution, lambda);
    cert.converged = converged;
    return cert;
  };

  if (ynorm <= delta || lambda_max == 0.0) return finish(Vector::Zero(n), lambda_max, true);

  double lam_lo = config.lambda_min_ratio * lambda_max;
  double lam_hi = lambda_max;
  if (config.lambda_bracket) {
    lam_lo = config.lambda_bracket->first;
    lam_hi = config.lambda_bracket->second;
    require(lam_lo > 0.0 && lam_lo < lam_hi, Errc::invalid_config, "lambda bracket must be 0 < lo < hi");
  }
  const double tol = config.constraint_tol * std::max(1.0, delta);

  struct Point {
    double lambda;
    double residual;
    Vector s;
  };
  std::vector<Point> trajectory;
  trajectory.push_back({lambda_max, ynorm, Vector::Zero(n)});

  auto nearest = [&](double lambda) -> const Vector* {
    const Point* best = nullptr;
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& p : trajectory) {
      const double d = std::abs(std::log(p.lambda / lambda));
      if (d < gap) {
        gap = d;
        best = &p;
      }
    }
    return best == nullptr ? nullptr : &best->s;
  };

  auto check_monotone = [&] {
    auto pts = trajectory;
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.lambda < b.lambda; });
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (pts[i].residual < pts[i - 1].residual - 1e-10 * std::max(1.0, pts[i - 1].residual))
        return false;
    return true;
  };

  auto evaluate = [&](double lambda, std::optional<double>& step) {
    auto run = detail::run_lasso(op, y, lambda, config, nearest(lambda));
    cert.inner_iterations += run.result.iterations;
    if (!run.result.exact) {
      // A stalled iterate moves the bracket by its residual error; tighten
      // before trusting it.
      SolverConfig tight = config;
      tight.l1_opt_tol = std::min(config.l1_opt_tol, 1e-13);
      const Vector warm = run.result.s;
      run = detail::run_lasso(op, y, lambda, tight, &warm);
      cert.inner_iterations += run.result.iterations;
    }
    ++cert.outer_iterations;
    const double r = (y - A * run.result.s).norm();
    step.reset();
    if (run.result.exact && run.support.q_sq > 0.0 && delta * delta > run.support.r0_sq)
      step = std::sqrt((delta * delta - run.support.r0_sq) / run.support.q_sq);
    trajectory.push_back({lambda, r, run.result.s});
    return std::make_pair(r, run.result.converged);
  };

  std::optional<double> step;

  // Radius below the tolerance band: the constraint is (numerically) an
  // equality, so walk down to the bracket floor along a warm-started path.
  if (delta <= tol) {
    double lambda = lam_hi;
    std::pair<double, bool> last{ynorm, true};
    while (lambda > lam_lo) {
      lambda = std::max(lambda * 0.1, lam_lo);
      last = evaluate(lambda, step);
      if (cert.outer_iterations >= config.max_outer_iters) break;
    }
    if (last.first > delta + tol)
      throw Error(Errc::infeasible_tolerance,
                  "residual " + std::to_string(last.first) + " at lambda_min exceeds delta " +
                      std::to_string(delta));
    cert.monotone = check_monotone();
    return finish(trajectory.back().s, lambda, last.second);
  }

  // Expand downward until the residual drops to the radius, then bisect in
  // log(lambda), taking the closed-form support step when it lands inside
  // the bracket.
  bool have_lo = false;
  double lambda = lam_hi;
  bool converged_inner = true;
  for (;;) {
    const bool at_floor = lambda <= lam_lo;
    lambda = std::max(lambda * 0.1, lam_lo);
    if (step && *step < lam_hi && *step > lambda) lambda = *step;
    auto [r, ok] = evaluate(lambda, step);
    converged_inner = ok;
    if (std::abs(r - delta) <= tol) {
      cert.monotone = check_monotone();
      return finish(trajectory.back().s, lambda, ok);
    }
    if (r > delta) {
      lam_hi = lambda;
      if (at_floor || lambda <= lam_lo) {
        throw Error(Errc::infeasible_tolerance,
                    "residual " + std::to_string(r) + " at lambda_min = " + std::to_string(lam_lo) +
                        " still exceeds delta = " + std::to_string(delta));
      }
    } else {
      lam_lo = lambda;
      have_lo = true;
      break;
    }
    if (cert.outer_iterations >= config.max_outer_iters) break;
  }

  while (have_lo && cert.outer_iterations < config.max_outer_iters) {
    double next = std::sqrt(lam_lo * lam_hi);
    if (step && *step > lam_lo && *step < lam_hi) next = *step;
    lambda = next;
    auto [r, ok] = evaluate(lambda, step);
    converged_inner = ok;
    if (std::abs(r - delta) <= tol) {
      cert.monotone = check_monotone();
      return finish(trajectory.back().s, lambda, ok);
    }
    if (r > delta)
      lam_hi = lambda;
    else
      lam_lo = lambda;
    if (lam_hi / lam_lo - 1.0 < 1e-14) break;
  }

  // Bracket collapsed or budget spent: return the closest point, flagged.
  const Point* best = &trajectory.front();
  for (const auto& p : trajectory)
    if (std::abs(p.residual - delta) < std::abs(best->residual - delta)) best = &p;
  cert.monotone = check_monotone();
  (void)converged_inner;
  return finish(best->s, best->lambda, false);
}

inline SolverCertificate solve_bpdn(const BpdnProblem& problem, const SolverConfig& config = {}) {
  return solve_bpdn(SparseOperator(problem.A, config), problem.y, problem.delta, config);
}

}  // namespace mldpcs
