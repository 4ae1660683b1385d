#include <gtest/gtest.h>

#include "mldpcs/numeric.hpp"

namespace mldpcs {
namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

TEST(DctBasis, OneByOneIsUnit) {
  const Matrix psi = dct_basis(1);
  ASSERT_EQ(psi.rows(), 1);
  EXPECT_DOUBLE_EQ(psi(0, 0), 1.0);
}

TEST(DctBasis, TwoByTwoMatchesClosedForm) {
  // c_0 = sqrt(1/2); c_1 cos(pi/4) = 1/sqrt(2); c_1 cos(3 pi/4) = -1/sqrt(2).
  const double h = 0.70710678118654752;
  const Matrix psi = dct_basis(2);
  EXPECT_NEAR(psi(0, 0), h, 1e-15);
  EXPECT_NEAR(psi(1, 0), h, 1e-15);
  EXPECT_NEAR(psi(0, 1), h, 1e-15);
  EXPECT_NEAR(psi(1, 1), -h, 1e-15);
}

TEST(DctBasis, ColumnKHasFrequencyK) {
  const Index n = 8;
  const Matrix psi = dct_basis(n);
  for (Index k = 0; k < n; ++k) {
    // Sign changes along column k equal k for DCT-II.
    int changes = 0;
    for (Index i = 1; i < n; ++i)
      if ((psi(i, k) > 0) != (psi(i - 1, k) > 0)) ++changes;
    EXPECT_EQ(changes, k);
  }
}

TEST(DctBasis, OrthonormalUpTo512) {
  for (Index n = 1; n <= 512; n += (n < 32 ? 1 : 37)) {
    const Matrix psi = dct_basis(n);
    EXPECT_LT(max_abs(psi.transpose() * psi - Matrix::Identity(n, n)), 1e-12) << "n=" << n;
  }
  const Matrix psi = dct_basis(512);
  EXPECT_LT(max_abs(psi.transpose() * psi - Matrix::Identity(512, 512)), 1e-12);
}

TEST(DctBasis, ZeroDimensionRejected) {
  try {
    dct_basis(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_dimension);
  }
}

TEST(GaussianMatrix, DeterministicPerStream) {
  RngStream a(42, 7), b(42, 7);
  EXPECT_EQ(gaussian_matrix(5, 4, a), gaussian_matrix(5, 4, b));
  RngStream c(42, 8);
  RngStream d(42, 7);
  EXPECT_NE(gaussian_matrix(5, 4, c), gaussian_matrix(5, 4, d));
}

TEST(GaussianMatrix, ShapeAndFinite) {
  RngStream rng(1, 0);
  const Matrix g = gaussian_matrix(2, 3, rng);
  EXPECT_EQ(g.rows(), 2);
  EXPECT_EQ(g.cols(), 3);
  EXPECT_TRUE(g.allFinite());
  EXPECT_THROW(gaussian_matrix(0, 3, rng), Error);
}

TEST(GaussianMatrix, StandardNormalMoments) {
  RngStream rng(2024, 1);
  const Matrix g = gaussian_matrix(1000, 1, rng);
  const double mean = g.mean();
  const double var = (g.array() - mean).square().sum() / 999.0;
  EXPECT_LT(std::abs(mean), 0.1);
  EXPECT_GT(var, 0.85);
  EXPECT_LT(var, 1.15);
}

TEST(ColumnNorms, Examples) {
  EXPECT_EQ(column_l2_norms(Matrix::Identity(3, 3)), Vector::Ones(3));
  Matrix m(2, 2);
  m << 3, 0, 4, 0;
  const Vector norms = column_l2_norms(m);
  EXPECT_DOUBLE_EQ(norms[0], 5.0);
  EXPECT_DOUBLE_EQ(norms[1], 0.0);
}

TEST(ColumnNorms, Homogeneous) {
  RngStream rng(3, 0);
  Matrix m = gaussian_matrix(6, 4, rng);
  const Vector before = column_l2_norms(m);
  m.col(2) *= -3.5;
  EXPECT_NEAR(column_l2_norms(m)[2], 3.5 * before[2], 1e-12);
}

TEST(NullBasis, UnitVectorCase) {
  Matrix b(2, 1);
  b << 1, 0;
  const Matrix f = orthonormal_null_basis(b);
  ASSERT_EQ(f.rows(), 1);
  ASSERT_EQ(f.cols(), 2);
  EXPECT_NEAR(f(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(f(0, 1)), 1.0, 1e-15);
}

TEST(NullBasis, RandomFullRankProperty) {
  RngStream rng(99, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const Index m = 4 + static_cast<Index>(rng.below(40));
    const Index M = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - 1)));
    const Matrix b = gaussian_matrix(m, M, rng);
    const Matrix f = orthonormal_null_basis(b);
    ASSERT_EQ(f.rows(), m - M);
    EXPECT_LT(max_abs(f * b), 1e-10);
    EXPECT_LT(max_abs(f * f.transpose() - Matrix::Identity(m - M, m - M)), 1e-10);
  }
}

TEST(NullBasis, ShapeTenByTwo) {
  RngStream rng(5, 5);
  const Matrix f = orthonormal_null_basis(gaussian_matrix(10, 2, rng));
  EXPECT_EQ(f.rows(), 8);
  EXPECT_EQ(f.cols(), 10);
}

TEST(NullBasis, RankDeficientRejected) {
  Matrix b(5, 2);
  b.col(0) << 1, 2, 3, 4, 5;
  b.col(1) = 2.0 * b.col(0);
  try {
    orthonormal_null_basis(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_key);
  }
}

TEST(LeastSquares, IdentityReturnsRhs) {
  const Vector r = (Vector(4) << 1, -2, 3, 0.5).finished();
  EXPECT_LT((least_squares(Matrix::Identity(4, 4), r) - r).norm(), 1e-14);
}

TEST(LeastSquares, ConstructThenSolve) {
  RngStream rng(11, 0);
  for (int t = 0; t < 50; ++t) {
    const Matrix b = gaussian_matrix(6, 2, rng);
    const Matrix w = gaussian_matrix(2, 1, rng);
    const Vector r = b * w.col(0);
    const Vector got = least_squares(b, r);
    EXPECT_LT((got - w.col(0)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((r - b * got).norm(), 1e-9);
  }
}

TEST(LeastSquares, ResidualOrthogonalToColumns) {
  RngStream rng(12, 0);
  for (int t = 0; t < 50; ++t) {
    const Matrix b = gaussian_matrix(20, 4, rng);
    const Matrix r = gaussian_matrix(20, 1, rng);
    const Vector w = least_squares(b, r.col(0));
    EXPECT_LT((b.transpose() * (r.col(0) - b * w)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(LeastSquares, SingularRejected) {
  Matrix b = Matrix::Zero(4, 2);
  b(0, 0) = 1;
  b(1, 0) = 1;
  try {
    least_squares(b, Vector::Ones(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_key);
  }
}

TEST(SpectralNorm, PowerIterationMatchesEigendecomposition) {
  RngStream rng(13, 0);
  for (int t = 0; t < 30; ++t) {
    const Index m = 2 + static_cast<Index>(rng.below(31));
    const Index n = 1 + static_cast<Index>(rng.below(8));
    const Matrix a = gaussian_matrix(m, n, rng);
    const double exact = spectral_norm_exact(a);
    EXPECT_NEAR(spectral_norm_power(a, 5000, 1e-15), exact, 1e-8 * exact);
    Eigen::JacobiSVD<Matrix> svd(a);
    EXPECT_NEAR(exact, svd.singularValues()[0], 1e-10 * exact);
  }
}

}  // namespace
}  // namespace mldpcs
