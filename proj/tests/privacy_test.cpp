#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mldpcs/privacy.hpp"
#include "mldpcs/sensing.hpp"

namespace mldpcs {
namespace {

TEST(Sensitivity, Examples) {
  EXPECT_DOUBLE_EQ(l2_sensitivity(Matrix::Identity(4, 4)), 1.0);
  Matrix m(2, 2);
  m << 3, 0, 4, 0;
  EXPECT_DOUBLE_EQ(l2_sensitivity(m), 5.0);
  const auto e = build_ensemble(64, 0.5, Normalization::unit_column, RngStream(1, 0));
  EXPECT_NEAR(l2_sensitivity(e.phi), 1.0, 1e-12);
}

TEST(Calibration, ModesGiveDocumentedScales) {
  const auto e = build_ensemble(128, 0.5, Normalization::unit_column, RngStream(2, 0));
  const auto paper = calibrate(CalibrationMode::paper, PrivacyBudget(1.0), e.phi);
  EXPECT_DOUBLE_EQ(paper.scale, 8.0);
  const auto cal = calibrate(CalibrationMode::calibrated, PrivacyBudget(0.5), e.phi);
  EXPECT_NEAR(cal.scale, 2.0, 1e-12);
  EXPECT_THROW(PrivacyBudget(0.0), Error);
  EXPECT_THROW(PrivacyBudget(-1.0), Error);
}

TEST(Laplace, MomentsAndMedian) {
  RngStream rng(3, 0);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = laplace_sample(1.0, rng);
  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= static_cast<double>(draws.size());
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= static_cast<double>(draws.size() - 1);
  EXPECT_LT(std::abs(mean), 0.02);
  EXPECT_GT(var, 1.9);
  EXPECT_LT(var, 2.1);
  std::nth_element(draws.begin(), draws.begin() + 50000, draws.end());
  EXPECT_LT(std::abs(draws[50000]), 0.02);
}

TEST(Laplace, DeterministicAndValidated) {
  RngStream a(4, 0), b(4, 0);
  EXPECT_EQ(laplace_vector(10, 2.0, a), laplace_vector(10, 2.0, b));
  EXPECT_THROW(laplace_sample(0.0, a), Error);
  EXPECT_THROW(laplace_vector(3, -1.0, a), Error);
}

TEST(Privatize, HugeEpsilonIsNearlyNoiseless) {
  const auto e = build_ensemble(16, 0.5, Normalization::unit_column, RngStream(5, 0));
  const PrivacyBudget budget(1e9);
  const auto cal = calibrate(CalibrationMode::paper, budget, e.phi);
  RngStream rng(5, 1);
  const Vector y = Vector::LinSpaced(8, -1.0, 1.0);
  const auto out = privatize(y, budget, cal, rng);
  EXPECT_LT((out.y_tilde - y).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(out.calibration.mode, CalibrationMode::paper);
}

TEST(Privatize, NoiseEnergyMatchesSecondMoment) {
  // E ||z||^2 = 2 m b^2 = 8192 for m = 64, b = 8.
  const auto e = build_ensemble(128, 0.5, Normalization::unit_column, RngStream(6, 0));
  const PrivacyBudget budget(1.0);
  const auto cal = calibrate(CalibrationMode::paper, budget, e.phi);
  ASSERT_DOUBLE_EQ(cal.scale, 8.0);
  RngStream rng(6, 1);
  double total = 0.0;
  for (int t = 0; t < 1000; ++t) total += privatize(Vector::Zero(64), budget, cal, rng).noise.squaredNorm();
  EXPECT_NEAR(total / 1000.0, 8192.0, 0.05 * 8192.0);
}

TEST(Privatize, PerCoordinateVarianceAndIndependence) {
  const Index m = 4;
  const PrivacyBudget budget(0.5);
  NoiseCalibration cal{CalibrationMode::calibrated, 0.5, 1.0, 2.0};
  RngStream rng(7, 0);
  const int draws = 10000;
  Matrix z(draws, m);
  for (int t = 0; t < draws; ++t) z.row(t) = privatize(Vector::Zero(m), budget, cal, rng).noise.transpose();
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Matrix centered = z.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / (draws - 1);
  for (Index i = 0; i < m; ++i) {
    EXPECT_NEAR(cov(i, i), 2.0 * 4.0, 0.1 * 8.0);
    for (Index j = i + 1; j < m; ++j)
      EXPECT_LT(std::abs(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j))), 0.05);
  }
}

TEST(Privatize, RejectsMismatchedCalibration) {
  NoiseCalibration cal{CalibrationMode::calibrated, 0.5, 1.0, 2.0};
  RngStream rng(8, 0);
  EXPECT_THROW(privatize(Vector::Zero(3), PrivacyBudget(1.0), cal, rng), Error);
}

TEST(DefaultDelta, Values) {
  NoiseCalibration cal{CalibrationMode::paper, 1.0, 8.0, 8.0};
  EXPECT_NEAR(default_delta(cal, 64), 90.50966799187809, 1e-9);
  cal.scale = 1e-12;
  EXPECT_LT(default_delta(cal, 64), 1e-10);
  cal.scale = 3.0;
  const double d3 = default_delta(cal, 10);
  cal.scale = 6.0;
  EXPECT_NEAR(default_delta(cal, 10), 2.0 * d3, 1e-12);
}

TEST(DpProbe, IdenticalInputsNearZero) {
  auto mech = [](double x, RngStream& r) { return x + laplace_sample(2.0, r); };
  const auto r = dp_ratio_probe(mech, 0.0, 0.0, 20, 100000, RngStream(9, 0));
  EXPECT_TRUE(r.conclusive);
  EXPECT_LT(r.max_log_ratio, 0.15);
}

TEST(DpProbe, LaplaceMechanismWithinBudget) {
  const double eps = 0.5;
  auto mech = [eps](double x, RngStream& r) { return x + laplace_sample(1.0 / eps, r); };
  const auto r = dp_ratio_probe(mech, 0.0, 1.0, 20, 100000, RngStream(10, 0));
  EXPECT_TRUE(r.conclusive);
  EXPECT_LE(r.max_log_ratio, eps + 0.15);
}

TEST(DpProbe, DetectsUnderNoising) {
  auto mech = [](double x, RngStream& r) { return x + laplace_sample(1.0, r); };  // eps = 1
  const auto r = dp_ratio_probe(mech, 0.0, 1.0, 20, 100000, RngStream(11, 0));
  EXPECT_GT(r.max_log_ratio, 0.1 + 0.15);
}

TEST(DpProbe, ArgumentChecks) {
  auto mech = [](double x, RngStream&) { return x; };
  EXPECT_THROW(dp_ratio_probe(mech, 0, 1, 4, 100000, RngStream(1, 0)), Error);
  EXPECT_THROW(dp_ratio_probe(mech, 0, 1, 10, 999, RngStream(1, 0)), Error);
  // A deterministic mechanism puts everything in one bin per input.
  const auto r = dp_ratio_probe(mech, 0, 1, 10, 10000, RngStream(1, 0));
  EXPECT_FALSE(r.conclusive);
}

}  // namespace
}  // namespace mldpcs
