#include <gtest/gtest.h>

#include <cmath>

#include "mldpcs/sensing.hpp"

namespace mldpcs {
namespace {

TEST(BuildEnsemble, DefaultRegimeShapes) {
  const auto e = build_ensemble(16, 0.5, Normalization::unit_column, RngStream(1, 0));
  EXPECT_EQ(e.m(), 8);
  EXPECT_EQ(e.phi.rows(), 8);
  EXPECT_EQ(e.phi.cols(), 16);
  EXPECT_EQ(e.sensing.rows(), 8);
  EXPECT_EQ(e.sensing.cols(), 16);
  EXPECT_LT((e.sensing - e.phi * e.psi).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildEnsemble, UnitColumnNorms) {
  const auto e = build_ensemble(64, 0.5, Normalization::unit_column, RngStream(2, 0));
  const Vector norms = column_l2_norms(e.phi);
  EXPECT_LT((norms.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(BuildEnsemble, RawScaledConcentratesNearOne) {
  const auto e = build_ensemble(256, 0.5, Normalization::raw_scaled, RngStream(2, 0));
  const Vector norms = column_l2_norms(e.phi);
  EXPECT_NEAR(norms.mean(), 1.0, 0.05);
}

TEST(BuildEnsemble, Deterministic) {
  const auto a = build_ensemble(32, 0.5, Normalization::unit_column, RngStream(3, 9));
  const auto b = build_ensemble(32, 0.5, Normalization::unit_column, RngStream(3, 9));
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_EQ(a.sensing, b.sensing);
}

TEST(BuildEnsemble, InvalidRates) {
  for (double rate : {0.0, 1.0, -0.2, 1.5}) {
    try {
      build_ensemble(16, rate, Normalization::unit_column, RngStream(1, 0));
      FAIL() << rate;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_config);
    }
  }
  EXPECT_THROW(build_ensemble(3, 0.5, Normalization::unit_column, RngStream(1, 0)), Error);
}

TEST(Sample, ZeroAndIdentity) {
  const auto e = build_ensemble(16, 0.5, Normalization::unit_column, RngStream(1, 0));
  EXPECT_EQ(sample(e, Vector::Zero(16)), Vector::Zero(8));
  const auto id = MeasurementEnsemble::from_matrices(Matrix::Identity(5, 5), Matrix::Identity(5, 5));
  const Vector x = (Vector(5) << 1, 2, 3, 4, 5).finished();
  EXPECT_EQ(sample(id, x), x);
  EXPECT_THROW(sample(e, Vector::Zero(15)), Error);
}

TEST(Sample, LinearAndBasisIndependent) {
  const auto e = build_ensemble(40, 0.5, Normalization::unit_column, RngStream(4, 0));
  RngStream rng(4, 1);
  for (int t = 0; t < 50; ++t) {
    const Vector x1 = gaussian_matrix(40, 1, rng).col(0);
    const Vector x2 = gaussian_matrix(40, 1, rng).col(0);
    const double a = rng.normal(), b = rng.normal();
    EXPECT_LT((sample(e, a * x1 + b * x2) - (a * sample(e, x1) + b * sample(e, x2))).norm(), 1e-10);
    EXPECT_LT((sample(e, synthesize(e, analyze(e, x1))) - sample(e, x1)).norm(), 1e-10);
  }
}

TEST(AnalyzeSynthesize, RoundTripAndIsometry) {
  const auto e = build_ensemble(33, 0.5, Normalization::unit_column, RngStream(5, 0));
  RngStream rng(5, 1);
  for (int t = 0; t < 50; ++t) {
    const Vector x = gaussian_matrix(33, 1, rng).col(0);
    EXPECT_LT((synthesize(e, analyze(e, x)) - x).cwiseAbs().maxCoeff(), 1e-10);
  }
  for (Index k = 0; k < 33; ++k) {
    EXPECT_NEAR(synthesize(e, Vector::Unit(33, k)).norm(), 1.0, 1e-12);
  }
}

TEST(AnalyzeSynthesize, ConstantConcentratesOnDc) {
  const Index n = 20;
  const auto e = build_ensemble(n, 0.5, Normalization::unit_column, RngStream(6, 0));
  const double c = 0.75;
  const Vector s = analyze(e, Vector::Constant(n, c));
  EXPECT_NEAR(std::abs(s[0]), c * std::sqrt(static_cast<double>(n)), 1e-12);
  EXPECT_LT(s.tail(n - 1).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Sparsify, Examples) {
  const Vector s = (Vector(3) << 3, -5, 1).finished();
  EXPECT_EQ(sparsify(s, {2}), (Vector(3) << 3, -5, 0).finished());
  const Vector sparse = (Vector(5) << 0, 2, 0, -1, 0).finished();
  EXPECT_EQ(sparsify(sparse, {2}), sparse);
  // ties keep the lowest index
  const Vector tie = (Vector(4) << 1, -1, 1, 2).finished();
  EXPECT_EQ(sparsify(tie, {2}), (Vector(4) << 1, 0, 0, 2).finished());
}

TEST(Sparsify, NeverExceedsS) {
  RngStream rng(7, 0);
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + static_cast<Index>(rng.below(30));
    const Index S = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    const Vector s = gaussian_matrix(n, 1, rng).col(0);
    const Vector out = sparsify(s, {S});
    EXPECT_LE((out.array() != 0.0).count(), S);
  }
}

TEST(RipProbe, IdentityIsExactIsometry) {
  const auto id = MeasurementEnsemble::from_matrices(Matrix::Identity(12, 12), Matrix::Identity(12, 12));
  EXPECT_LT(rip_probe(id, 4, 200, RngStream(1, 0)), 1e-12);
}

TEST(RipProbe, NonDecreasingInTrials) {
  const auto e = build_ensemble(64, 0.5, Normalization::unit_column, RngStream(8, 0));
  double prev = 0.0;
  for (int trials : {1, 10, 50, 200, 1000}) {
    const double est = rip_probe(e, 5, trials, RngStream(8, 1));
    EXPECT_GE(est, prev);
    prev = est;
  }
}

TEST(RipProbe, DefaultRegimeReported) {
  const auto e = build_ensemble(128, 0.5, Normalization::unit_column, RngStream(9, 0));
  const double est = rip_probe(e, 10, 1000, RngStream(9, 1));
  const double threshold = std::sqrt(2.0) - 1.0;
  RecordProperty("rip_estimate_S10", std::to_string(est));
  EXPECT_GT(est, 0.0);
  EXPECT_TRUE(std::isfinite(est));
  std::cout << "rip_probe n=128 m=64 S=10 trials=1000: " << est << " (threshold " << threshold
            << ")\n";
}

}  // namespace
}  // namespace mldpcs
