#pragma once

// Authorization tiers:
//   L0  no keys: the published measurements are the product.
//   L1  measurement key: one BPDN solve against A = Phi Psi.
//   L2  measurement + coding keys: cancel the watermark with an annihilator
//       F (F B = 0), solve on F y_w, estimate w by least squares, snap it to
//       {-a, a}, subtract B w'' and solve again.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mldpcs/embedding.hpp"
#include "mldpcs/sensing.hpp"
#include "mldpcs/solver.hpp"

namespace mldpcs {

enum class AuthorizationLevel { l0, l1, l2 };

inline const char* to_string(AuthorizationLevel level) {
  switch (level) {
    case AuthorizationLevel::l0: return "l0";
    case AuthorizationLevel::l1: return "l1";
    case AuthorizationLevel::l2: return "l2";
  }
  return "?";
}

inline AuthorizationLevel parse_level(const std::string& text) {
  if (text == "l0" || text == "L0") return AuthorizationLevel::l0;
  if (text == "l1" || text == "L1") return AuthorizationLevel::l1;
  if (text == "l2" || text == "L2") return AuthorizationLevel::l2;
  throw Error(Errc::invalid_config, "unknown authorization level '" + text + "'");
}

struct ReconstructionResult {
  AuthorizationLevel level = AuthorizationLevel::l0;
  Vector published;              // the vector the caller supplied
  std::optional<Vector> x_star;  // absent at L0
  std::optional<Vector> s_star;
  std::optional<Vector> w_least_squares;  // w'
  std::optional<Vector> w_snapped;        // w''
  std::optional<BitString> bits;
  std::vector<SolverCertificate> certificates;
  double delta = 0.0;
  double projected_delta = 0.0;

  bool converged() const {
    for (const auto& c : certificates)
      if (!c.converged) return false;
    return true;
  }
};

/// Level 0: identity on the published measurements.
inline Vector reconstruct_l0(const Eigen::Ref<const Vector>& published) { return published; }

/// Level 1 decoder; caches the sensing operator across records.
class SemiDecoder {
 public:
  SemiDecoder(const MeasurementEnsemble& ensemble, SolverConfig config = {})
      : ensemble_(&ensemble), config_(config), op_(ensemble.sensing, config_) {}

  ReconstructionResult operator()(const Eigen::Ref<const Vector>& y_pub, double delta) const {
    require(delta >= 0.0, Errc::invalid_config, "delta must be >= 0");
    require_same_dim(y_pub.size(), ensemble_->m(), "semi reconstruction input");
    ReconstructionResult out;
    out.level = AuthorizationLevel::l1;
    out.published = y_pub;
    out.delta = delta;
    auto cert = solve_bpdn(op_, y_pub, delta, config_);
    out.x_star = ensemble_->psi * cert.solution;
    out.s_star = cert.solution;
    out.certificates.push_back(std::move(cert));
    return out;
  }

  const SparseOperator& sensing_operator() const { return op_; }

 private:
  const MeasurementEnsemble* ensemble_;
  SolverConfig config_;
  SparseOperator op_;
};

/// Annihilator of the coding matrix: T x m with T = m - M, F B = 0.
inline Matrix build_annihilator(const CodingKey& key) { return orthonormal_null_basis(key.B); }

/// Level 2 decoder; caches F, F A and both operators across records.
class FullDecoder {
 public:
  FullDecoder(const MeasurementEnsemble& ensemble, const CodingKey& key, SolverConfig config = {})
      : ensemble_(&ensemble),
        key_(&key),
        config_(config),
        semi_(ensemble, config),
        F_(build_annihilator(key)),
        op_projected_(F_ * ensemble.sensing, config_) {
    require_same_dim(key.m(), ensemble.m(), "coding key rows");
  }

  const Matrix& annihilator() const { return F_; }

  /// Radius for the projected solve when only the full-dimension radius is
  /// known: delta * sqrt(T / m), which equals b sqrt(2 T) under the default
  /// policy delta = b sqrt(2 m).
  double projected_delta_for(double delta) const {
    return delta * std::sqrt(static_cast<double>(F_.rows()) / static_cast<double>(ensemble_->m()));
  }

  ReconstructionResult operator()(const Eigen::Ref<const Vector>& y_w, double delta,
                                  std::optional<double> projected_delta = std::nullopt) const {
    require(delta >= 0.0, Errc::invalid_config, "delta must be >= 0");
    require_same_dim(y_w.size(), ensemble_->m(), "full reconstruction input");
    const double dp = projected_delta.value_or(projected_delta_for(delta));
    require(dp >= 0.0, Errc::invalid_config, "projected delta must be >= 0");

    ReconstructionResult out;
    out.level = AuthorizationLevel::l2;
    out.published = y_w;
    out.delta = delta;
    out.projected_delta = dp;

    // (1) y' = F y_w removes B w.
    const Vector y_proj = F_ * y_w;
    // (2) coarse coefficient estimate from the projected system.
    auto coarse = solve_bpdn(op_projected_, y_proj, dp, config_);
    // (3) least-squares message estimate from what A s~ leaves behind.
    const Vector leftover = y_w - ensemble_->sensing * coarse.solution;
    Vector w_ls = least_squares(key_->B, leftover);
    // (4) snap to the alphabet, sgn(0) = +1.
    Vector w_snap = w_ls.unaryExpr([a = key_->amplitude](double v) { return a * sign_of(v); });
    // (5) re-solve on the de-watermarked measurements.
    const Vector cleaned = y_w - key_->B * w_snap;
    auto fine = solve_bpdn(semi_.sensing_operator(), cleaned, delta, config_);

    out.x_star = ensemble_->psi * fine.solution;
    out.s_star = fine.solution;
    out.bits = decode_bits(w_snap);
    out.w_least_squares = std::move(w_ls);
    out.w_snapped = std::move(w_snap);
    out.certificates.push_back(std::move(coarse));
    out.certificates.push_back(std::move(fine));
    return out;
  }

 private:
  const MeasurementEnsemble* ensemble_;
  const CodingKey* key_;
  SolverConfig config_;
  SemiDecoder semi_;
  Matrix F_;
  SparseOperator op_projected_;
};

inline ReconstructionResult reconstruct_semi(const Eigen::Ref<const Vector>& y_pub,
                                             const MeasurementEnsemble& ensemble, double delta,
                                             const SolverConfig& config = {}) {
  return SemiDecoder(ensemble, config)(y_pub, delta);
}

/// Full recovery. A null key (embedding disabled) degenerates to the level 1
/// solve, relabelled as level 2.
inline ReconstructionResult reconstruct_full(const Eigen::Ref<const Vector>& y_w,
                                             const MeasurementEnsemble& ensemble,
                                             const CodingKey* key, double delta,
                                             const SolverConfig& config = {},
                                             std::optional<double> projected_delta = std::nullopt) {
  if (key == nullptr) {
    auto out = reconstruct_semi(y_w, ensemble, delta, config);
    out.level = AuthorizationLevel::l2;
    return out;
  }
  return FullDecoder(ensemble, *key, config)(y_w, delta, projected_delta);
}

inline BitString decode_message(const ReconstructionResult& result) {
  if (!result.w_snapped)
    throw Error(Errc::no_message, "reconstruction carries no watermark estimate");
  return decode_bits(*result.w_snapped);
}

}  // namespace mldpcs
