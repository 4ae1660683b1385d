#pragma once

// Dense linear algebra shared by every other module: orthonormal DCT basis,
// seeded Gaussian ensembles, null-space construction and least squares.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "mldpcs/error.hpp"
#include "mldpcs/rng.hpp"

namespace mldpcs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// sgn with sgn(0) = +1.
inline double sign_of(double v) noexcept { return v < 0.0 ? -1.0 : 1.0; }

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

inline void require_same_dim(Index got, Index want, const char* what) {
  require(got == want, Errc::dimension_mismatch,
          std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
              std::to_string(got));
}

/// n x n orthonormal DCT-II basis; column k is the basis vector of frequency k,
/// so x = Psi * s synthesizes and s = Psi^T * x analyzes.
inline Matrix dct_basis(Index n) {
  require(n >= 1, Errc::invalid_dimension, "dct_basis needs n >= 1");
  Matrix psi(n, n);
  const double c0 = std::sqrt(1.0 / static_cast<double>(n));
  const double ck = std::sqrt(2.0 / static_cast<double>(n));
  for (Index k = 0; k < n; ++k) {
    const double scale = k == 0 ? c0 : ck;
    for (Index i = 0; i < n; ++i) {
      psi(i, k) = scale * std::cos(std::numbers::pi * static_cast<double>((2 * i + 1) * k) /
                                   static_cast<double>(2 * n));
    }
  }
  return psi;
}

/// i.i.d. standard normal entries, filled column by column from `rng`.
inline Matrix gaussian_matrix(Index rows, Index cols, RngStream& rng) {
  require(rows >= 1 && cols >= 1, Errc::invalid_dimension, "gaussian_matrix needs rows, cols >= 1");
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
  return g;
}

inline Vector column_l2_norms(const Eigen::Ref<const Matrix>& m) {
  require(m.size() > 0, Errc::invalid_dimension, "column_l2_norms needs a nonempty matrix");
  return m.colwise().norm().transpose();
}

/// Largest singular value by power iteration on M^T M. Converges from below,
/// so the result never overestimates sigma_max.
inline double spectral_norm_power(const Eigen::Ref<const Matrix>& m, int max_iters = 200,
                                  double tol = 1e-10) {
  if (m.size() == 0) return 0.0;
  // A fixed pseudo-random start: structured starts such as the all-ones
  // vector are exactly orthogonal to the top singular vector for some
  // equal-norm column sets.
  RngStream start(0x9e3779b97f4a7c15ULL, 0);
  Vector v = gaussian_matrix(m.cols(), 1, start).col(0).normalized();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = m.transpose() * (m * v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const bool done = std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next));
    lambda = next;
    if (done) break;
  }
  // Rayleigh quotient of the final iterate.
  lambda = (m * v).squaredNorm();
  return std::sqrt(std::max(lambda, 0.0));
}

/// Exact largest singular value from a symmetric eigendecomposition of the
/// smaller Gram matrix.
inline double spectral_norm_exact(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

namespace detail {

inline bool full_column_rank(const Eigen::Ref<const Matrix>& b) {
  Eigen::ColPivHouseholderQR<Matrix> qr(b);
  qr.setThreshold(1e-12);
  return qr.rank() == b.cols();
}

}  // namespace detail

/// Orthonormal basis of the left null space of B (m x M), returned as the
/// rows of F (T x m, T = m - M) so that F * B = 0 and F * F^T = I.
inline Matrix orthonormal_null_basis(const Eigen::Ref<const Matrix>& b) {
  const Index m = b.rows();
  const Index cols = b.cols();
  require(cols >= 1 && m > cols, Errc::invalid_dimension,
          "orthonormal_null_basis needs m > M >= 1");
  require(b.allFinite(), Errc::degenerate_key, "coding matrix has non-finite entries");
  require(detail::full_column_rank(b), Errc::degenerate_key, "coding matrix is rank deficient");
  Eigen::HouseholderQR<Matrix> qr(b);
  const Matrix q = qr.householderQ();
  return q.rightCols(m - cols).transpose();
}

/// argmin_w ||r - B w||_2 via column-pivoted QR of B.
inline Vector least_squares(const Eigen::Ref<const Matrix>& b, const Eigen::Ref<const Vector>& r) {
  require_same_dim(r.size(), b.rows(), "least_squares rhs");
  require(b.cols() >= 1 && b.rows() >= b.cols(), Errc::degenerate_key,
          "least_squares needs a tall design matrix");
  Eigen::ColPivHouseholderQR<Matrix> qr(b);
  qr.setThreshold(1e-12);
  require(qr.rank() == b.cols(), Errc::degenerate_key, "least_squares design is rank deficient");
  return qr.solve(r);
}

}  // namespace mldpcs
