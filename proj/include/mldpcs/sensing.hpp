#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mldpcs/numeric.hpp"

namespace mldpcs {

enum class Normalization { unit_column, raw_scaled };
enum class SparseBasis { dct, identity };

inline const char* to_string(Normalization mode) {
  return mode == Normalization::unit_column ? "unit-column" : "raw-scaled";
}

inline Normalization parse_normalization(const std::string& text) {
  if (text == "unit-column") return Normalization::unit_column;
  if (text == "raw-scaled") return Normalization::raw_scaled;
  throw Error(Errc::invalid_config, "unknown normalization mode '" + text + "'");
}

inline const char* to_string(SparseBasis basis) {
  return basis == SparseBasis::dct ? "dct" : "identity";
}

inline SparseBasis parse_basis(const std::string& text) {
  if (text == "dct") return SparseBasis::dct;
  if (text == "identity") return SparseBasis::identity;
  throw Error(Errc::invalid_config, "unknown sparse basis '" + text + "'");
}

/// m = round(rate * n); rate must lie strictly inside (0, 1).
inline Index measurement_count(Index n, double measurement_rate) {
  require(measurement_rate > 0.0 && measurement_rate < 1.0, Errc::invalid_config,
          "measurement rate must lie in (0, 1)");
  return static_cast<Index>(std::llround(measurement_rate * static_cast<double>(n)));
}

/// The measurement key: Phi (m x n), Psi (n x n) and the sensing matrix
/// A = Phi * Psi acting on coefficient vectors.
struct MeasurementEnsemble {
  Matrix phi;
  Matrix psi;
  Matrix sensing;
  Normalization normalization = Normalization::unit_column;
  SparseBasis basis = SparseBasis::dct;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  Index m() const { return phi.rows(); }
  Index n() const { return phi.cols(); }

  /// Assemble from explicit matrices. Used for square identity test modes;
  /// does not enforce m < n.
  static MeasurementEnsemble from_matrices(Matrix phi, Matrix psi) {
    require(phi.cols() == psi.rows() && psi.rows() == psi.cols(), Errc::dimension_mismatch,
            "ensemble: phi is m x n and psi must be n x n");
    MeasurementEnsemble e;
    e.sensing = phi * psi;
    e.phi = std::move(phi);
    e.psi = std::move(psi);
    return e;
  }
};

inline MeasurementEnsemble build_ensemble(Index n, double measurement_rate, Normalization mode,
                                          RngStream rng, SparseBasis basis = SparseBasis::dct) {
  const Index m = measurement_count(n, measurement_rate);
  require(n >= 4, Errc::invalid_dimension, "build_ensemble needs n >= 4");
  require(m >= 2 && m < n, Errc::invalid_config,
          "measurement rate gives m = " + std::to_string(m) + ", need 2 <= m < n");
  MeasurementEnsemble e;
  e.seed = rng.seed();
  e.stream_id = rng.stream_id();
  e.normalization = mode;
  e.basis = basis;
  e.phi = gaussian_matrix(m, n, rng);
  if (mode == Normalization::unit_column) {
    for (Index j = 0; j < n; ++j) e.phi.col(j) /= e.phi.col(j).norm();
  } else {
    e.phi /= std::sqrt(static_cast<double>(m));
  }
  e.psi = basis == SparseBasis::dct ? dct_basis(n) : Matrix(Matrix::Identity(n, n));
  e.sensing = e.phi * e.psi;
  return e;
}

inline Vector sample(const MeasurementEnsemble& e, const Eigen::Ref<const Vector>& x) {
  require_same_dim(x.size(), e.n(), "sample");
  return e.phi * x;
}

inline Vector analyze(const MeasurementEnsemble& e, const Eigen::Ref<const Vector>& x) {
  require_same_dim(x.size(), e.n(), "analyze");
  return e.psi.transpose() * x;
}

inline Vector synthesize(const MeasurementEnsemble& e, const Eigen::Ref<const Vector>& s) {
  require_same_dim(s.size(), e.n(), "synthesize");
  return e.psi * s;
}

struct SparsityProfile {
  Index S = 1;
};

/// Keep the S largest-magnitude entries; ties keep the lower index.
inline Vector sparsify(const Eigen::Ref<const Vector>& s, SparsityProfile profile) {
  require(profile.S >= 1 && profile.S <= s.size(), Errc::invalid_config,
          "sparsity level must satisfy 1 <= S <= dim");
  std::vector<Index> order(static_cast<std::size_t>(s.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(s[a]) > std::abs(s[b]); });
  Vector out = Vector::Zero(s.size());
  for (Index k = 0; k < profile.S; ++k) out[order[k]] = s[order[k]];
  return out;
}

/// S distinct positions drawn uniformly from [0, n), in draw order.
inline std::vector<Index> random_support(Index n, Index S, RngStream& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index k = 0; k < S; ++k) {
    const auto j = k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(pool[k], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(S));
  return pool;
}

/// Monte Carlo lower bound on the S-restricted isometry constant of the
/// sensing matrix: max over random S-sparse unit u of | ||A u||^2 - 1 |.
inline double rip_probe(const MeasurementEnsemble& e, Index S, int trials, RngStream rng) {
  require(S >= 1 && S <= e.m(), Errc::invalid_config, "rip_probe needs 1 <= S <= m");
  require(trials >= 1, Errc::invalid_config, "rip_probe needs trials >= 1");
  double worst = 0.0;
  Vector u(S);
  for (int t = 0; t < trials; ++t) {
    const auto support = random_support(e.n(), S, rng);
    for (Index k = 0; k < S; ++k) u[k] = rng.normal();
    u.normalize();
    Vector au = Vector::Zero(e.m());
    for (Index k = 0; k < S; ++k) au += u[k] * e.sensing.col(support[static_cast<std::size_t>(k)]);
    worst = std::max(worst, std::abs(au.squaredNorm() - 1.0));
  }
  return worst;
}

}  // namespace mldpcs
