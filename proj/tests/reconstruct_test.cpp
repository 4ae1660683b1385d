#include <gtest/gtest.h>

#include <cmath>

#include "mldpcs/privacy.hpp"
#include "mldpcs/reconstruct.hpp"
#include "support/test_data.hpp"

namespace mldpcs {
namespace {

using testing::planted_spikes;

TEST(Level0, Passthrough) {
  const Vector y = (Vector(3) << 1.0, -2.0, 0.25).finished();
  EXPECT_EQ(reconstruct_l0(y), y);
}

TEST(Annihilator, ShapeAndProperty) {
  const auto key = build_coding_key(10, 0.2, 1.0, RngStream(1, 0));
  const Matrix F = build_annihilator(key);
  EXPECT_EQ(F.rows(), 8);
  EXPECT_EQ(F.cols(), 10);
  EXPECT_LT((F * key.B).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Annihilator, CancelsWatermark) {
  const auto ens = build_ensemble(64, 0.5, Normalization::unit_column, RngStream(2, 0));
  const auto key = build_coding_key(32, 0.2, 1.0, RngStream(2, 1));
  const Matrix F = build_annihilator(key);
  RngStream rng(2, 2);
  for (int t = 0; t < 50; ++t) {
    const Vector s = gaussian_matrix(64, 1, rng).col(0);
    const Vector z = laplace_vector(32, 0.3, rng);
    const auto msg = encode_message(random_bits(key.message_length(), rng), key.amplitude);
    const Vector yw = embed(ens, s, &key, &msg, z);
    EXPECT_LT((F * yw - (F * ens.sensing * s + F * z)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Semi, NoiselessSparseRecovery) {
  const auto ens = build_ensemble(128, 0.5, Normalization::unit_column, RngStream(3, 0));
  const SemiDecoder semi(ens);
  RngStream rng(3, 1);
  int ok = 0;
  for (int t = 0; t < 20; ++t) {
    const Vector s = planted_spikes(128, 10, rng);
    const auto res = semi(ens.sensing * s, 0.0);
    ASSERT_TRUE(res.x_star.has_value());
    ASSERT_EQ(res.certificates.size(), 1u);
    if ((*res.x_star - ens.psi * s).norm() < 1e-5) ++ok;
  }
  EXPECT_GE(ok, 19);
}

TEST(Semi, LargeRadiusGivesZero) {
  const auto ens = build_ensemble(32, 0.5, Normalization::unit_column, RngStream(4, 0));
  const Vector y = Vector::LinSpaced(16, -1, 1);
  const auto res = reconstruct_semi(y, ens, y.norm() + 1e-9);
  EXPECT_EQ(*res.x_star, Vector::Zero(32));
}

TEST(Full, NoiselessWatermarkAndSignalExact) {
  const auto ens = build_ensemble(128, 0.5, Normalization::unit_column, RngStream(5, 0));
  const auto key = build_coding_key(64, 0.2, 0.5, RngStream(5, 1));
  const FullDecoder full(ens, key);
  RngStream rng(5, 2);
  int ok = 0;
  for (int t = 0; t < 20; ++t) {
    const Vector s = planted_spikes(128, 10, rng);
    const auto msg = encode_message(random_bits(key.message_length(), rng), key.amplitude);
    const Vector yw = embed(ens, s, &key, &msg, Vector::Zero(64));
    const auto res = full(yw, 0.0, 0.0);
    ASSERT_EQ(res.certificates.size(), 2u);
    ASSERT_TRUE(res.bits.has_value());
    if (*res.w_snapped == msg.w && (*res.x_star - ens.psi * s).norm() < 1e-5) ++ok;
    EXPECT_EQ(decode_message(res), *res.bits);
  }
  EXPECT_GE(ok, 19);
}

TEST(Full, DisabledEmbeddingMatchesSemi) {
  const auto ens = build_ensemble(48, 0.5, Normalization::unit_column, RngStream(6, 0));
  RngStream rng(6, 1);
  const Vector s = planted_spikes(48, 4, rng);
  const Vector y = ens.sensing * s + laplace_vector(24, 0.05, rng);
  const auto semi = reconstruct_semi(y, ens, 0.3);
  const auto full = reconstruct_full(y, ens, nullptr, 0.3);
  EXPECT_LT((*semi.x_star - *full.x_star).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(decode_message(full), Error);
}

TEST(Full, ProjectedRadiusDefault) {
  const auto ens = build_ensemble(64, 0.5, Normalization::unit_column, RngStream(7, 0));
  const auto key = build_coding_key(32, 0.2, 0.5, RngStream(7, 1));
  const FullDecoder full(ens, key);
  // delta = b sqrt(2m) -> b sqrt(2T)
  const double b = 0.7;
  EXPECT_NEAR(full.projected_delta_for(b * std::sqrt(64.0)), b * std::sqrt(2.0 * 26), 1e-12);
}

TEST(Levels, FullBeatsSemiWithWatermark) {
  // Paired trials: same record, noise and message for both levels.
  const auto ens = build_ensemble(64, 0.5, Normalization::unit_column, RngStream(8, 0));
  const SemiDecoder semi(ens);
  RngStream rng(8, 1);
  double err_semi = 0.0, err_full = 0.0;
  const int trials = 100;
  const double b = 0.01;
  const auto key = build_coding_key(32, 0.2, 1.0, RngStream(8, 2));
  const FullDecoder full(ens, key);
  for (int t = 0; t < trials; ++t) {
    const Vector s = planted_spikes(64, 5, rng);
    const Vector z = laplace_vector(32, b, rng);
    const auto msg = encode_message(random_bits(key.message_length(), rng), key.amplitude);
    const Vector yw = embed(ens, s, &key, &msg, z);
    const double delta = b * std::sqrt(64.0);
    err_semi += (*semi(yw, delta).x_star - ens.psi * s).norm();
    err_full += (*full(yw, delta).x_star - ens.psi * s).norm();
  }
  EXPECT_GT(err_semi / trials, err_full / trials);
}

TEST(Levels, BitErrorRateImprovesWithEpsilon) {
  const auto ens = build_ensemble(64, 0.5, Normalization::unit_column, RngStream(9, 0));
  const auto key = build_coding_key(32, 0.2, 1.0, RngStream(9, 1));
  const FullDecoder full(ens, key);
  auto ber = [&](double eps) {
    const auto cal = calibrate(CalibrationMode::calibrated, PrivacyBudget(eps), ens.phi);
    RngStream rng(9, 2);  // matched seeds across epsilon
    int wrong = 0, total = 0;
    for (int t = 0; t < 100; ++t) {
      const Vector s = 3.0 * planted_spikes(64, 5, rng);
      RngStream noise = rng.derive(static_cast<std::uint64_t>(t));
      const Vector z = laplace_vector(32, cal.scale, noise);
      const auto msg = encode_message(random_bits(key.message_length(), rng), key.amplitude);
      const auto res = full(embed(ens, s, &key, &msg, z), default_delta(cal, 32));
      for (std::size_t i = 0; i < msg.bits.size(); ++i) {
        wrong += (*res.bits)[i] != msg.bits[i];
        ++total;
      }
    }
    return static_cast<double>(wrong) / total;
  };
  const double high = ber(1.6), low = ber(0.1);
  std::cout << "bit error rate eps=1.6: " << high << "  eps=0.1: " << low << "\n";
  EXPECT_LE(high, low);
}

TEST(Determinism, IdenticalInputsIdenticalOutputs) {
  const auto ens = build_ensemble(64, 0.5, Normalization::unit_column, RngStream(10, 0));
  const auto key = build_coding_key(32, 0.2, 1.0, RngStream(10, 1));
  RngStream rng(10, 2);
  const Vector s = planted_spikes(64, 5, rng);
  const auto msg = encode_message(random_bits(key.message_length(), rng), key.amplitude);
  const Vector yw = embed(ens, s, &key, &msg, laplace_vector(32, 0.2, rng));
  const auto a = reconstruct_full(yw, ens, &key, 1.5);
  const auto b = reconstruct_full(yw, ens, &key, 1.5);
  EXPECT_EQ(*a.x_star, *b.x_star);
  EXPECT_EQ(*a.bits, *b.bits);
}

}  // namespace
}  // namespace mldpcs
