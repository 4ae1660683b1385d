#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mldpcs/numeric.hpp"

namespace mldpcs {

struct PrivacyBudget {
  double epsilon = 1.0;

  explicit PrivacyBudget(double eps) : epsilon(eps) {
    require(std::isfinite(eps) && eps > 0.0, Errc::invalid_config, "privacy budget must be > 0");
  }
};

enum class CalibrationMode {
  paper,       // Laplace scale sqrt(m) / epsilon
  calibrated,  // Laplace scale delta_q(Phi) / epsilon
};

inline const char* to_string(CalibrationMode mode) {
  return mode == CalibrationMode::paper ? "paper" : "calibrated";
}

inline CalibrationMode parse_calibration(const std::string& text) {
  if (text == "paper") return CalibrationMode::paper;
  if (text == "calibrated") return CalibrationMode::calibrated;
  throw Error(Errc::invalid_config, "unknown calibration mode '" + text + "'");
}

struct NoiseCalibration {
  CalibrationMode mode = CalibrationMode::calibrated;
  double epsilon = 1.0;
  double sensitivity = 1.0;
  double scale = 1.0;  // Laplace b
};

/// L2 sensitivity of y = Phi x under a unit change of one coordinate of x:
/// the largest column norm of Phi.
inline double l2_sensitivity(const Eigen::Ref<const Matrix>& phi) {
  return column_l2_norms(phi).maxCoeff();
}

inline NoiseCalibration calibrate(CalibrationMode mode, PrivacyBudget budget,
                                  const Eigen::Ref<const Matrix>& phi) {
  NoiseCalibration c;
  c.mode = mode;
  c.epsilon = budget.epsilon;
  c.sensitivity = mode == CalibrationMode::paper ? std::sqrt(static_cast<double>(phi.rows()))
                                                 : l2_sensitivity(phi);
  c.scale = c.sensitivity / budget.epsilon;
  return c;
}

/// Inverse-CDF Laplace draw: z = -b sgn(u) ln(1 - 2|u|), u ~ U(-1/2, 1/2).
inline double laplace_sample(double scale, RngStream& rng) {
  require(std::isfinite(scale) && scale > 0.0, Errc::invalid_config, "Laplace scale must be > 0");
  const double u = rng.uniform_open() - 0.5;
  return -scale * sign_of(u) * std::log1p(-2.0 * std::abs(u));
}

inline Vector laplace_vector(Index dim, double scale, RngStream& rng) {
  require(std::isfinite(scale) && scale > 0.0, Errc::invalid_config, "Laplace scale must be > 0");
  Vector z(dim);
  for (Index i = 0; i < dim; ++i) z[i] = laplace_sample(scale, rng);
  return z;
}

struct PrivatizedRecord {
  Vector y_tilde;
  Vector noise;
  NoiseCalibration calibration;
};

/// y~ = y + z with z i.i.d. Laplace(calibration.scale).
inline PrivatizedRecord privatize(const Eigen::Ref<const Vector>& y, PrivacyBudget budget,
                                  const NoiseCalibration& calibration, RngStream& rng) {
  require(std::abs(calibration.epsilon - budget.epsilon) <= 1e-12 * budget.epsilon,
          Errc::invalid_config, "calibration was computed for a different epsilon");
  PrivatizedRecord out;
  out.noise = laplace_vector(y.size(), calibration.scale, rng);
  out.y_tilde = y + out.noise;
  out.calibration = calibration;
  return out;
}

/// Root of the expected squared noise norm, b * sqrt(2 m).
inline double default_delta(const NoiseCalibration& calibration, Index m) {
  require(m >= 1, Errc::invalid_dimension, "default_delta needs m >= 1");
  return calibration.scale * std::sqrt(2.0 * static_cast<double>(m));
}

struct DpProbeResult {
  double max_log_ratio = 0.0;
  int bins_used = 0;
  bool conclusive = false;
};

/// Histogram test of the DP inequality on a scalar mechanism. Bin edges are
/// pooled-sample quantiles (equal mass); only bins where both histograms hold
/// at least 50 counts enter the maximum. A statistical smoke test, not a proof.
inline DpProbeResult dp_ratio_probe(const std::function<double(double, RngStream&)>& mechanism,
                                    double input_a, double input_b, int bins, int trials,
                                    RngStream rng) {
  require(bins >= 5, Errc::invalid_config, "dp_ratio_probe needs bins >= 5");
  require(trials >= 10000, Errc::invalid_config, "dp_ratio_probe needs trials >= 1e4");
  RngStream rng_a = rng.derive(0);
  RngStream rng_b = rng.derive(1);
  std::vector<double> a(static_cast<std::size_t>(trials));
  std::vector<double> b(static_cast<std::size_t>(trials));
  for (auto& v : a) v = mechanism(input_a, rng_a);
  for (auto& v : b) v = mechanism(input_b, rng_b);

  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> edges;  // interior edges
  for (int k = 1; k < bins; ++k)
    edges.push_back(pooled[pooled.size() * static_cast<std::size_t>(k) / static_cast<std::size_t>(bins)]);

  auto histogram = [&](const std::vector<double>& xs) {
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (double x : xs) {
      const auto k = std::upper_bound(edges.begin(), edges.end(), x) - edges.begin();
      ++counts[static_cast<std::size_t>(k)];
    }
    return counts;
  };
  const auto ca = histogram(a);
  const auto cb = histogram(b);

  DpProbeResult r;
  for (std::size_t k = 0; k < ca.size(); ++k) {
    if (ca[k] < 50 || cb[k] < 50) continue;
    ++r.bins_used;
    r.max_log_ratio = std::max(
        r.max_log_ratio, std::abs(std::log(static_cast<double>(ca[k]) / static_cast<double>(cb[k]))));
  }
  r.conclusive = r.bins_used >= 2;
  return r;
}

}  // namespace mldpcs
