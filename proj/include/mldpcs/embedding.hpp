#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mldpcs/numeric.hpp"
#include "mldpcs/sensing.hpp"

namespace mldpcs {

/// Secret coding key: B (m x M, unit columns), message amplitude a and the
/// embedding power cap P. a * sigma_max(B) * sqrt(M) <= P, so ||B w|| <= P
/// for every w in {-a, a}^M.
struct CodingKey {
  Matrix B;
  double amplitude = 0.0;
  double power_cap = 0.0;
  double sigma_max = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  Index m() const { return B.rows(); }
  Index message_length() const { return B.cols(); }
};

/// M = round(rate * m); must satisfy 1 <= M < m.
inline Index message_length_for(Index m, double embedding_rate) {
  require(embedding_rate > 0.0 && embedding_rate < 1.0, Errc::invalid_config,
          "embedding rate must lie in (0, 1)");
  const auto M = static_cast<Index>(std::llround(embedding_rate * static_cast<double>(m)));
  require(M >= 1 && M < m, Errc::invalid_config,
          "embedding rate gives M = " + std::to_string(M) + ", need 1 <= M < m");
  return M;
}

inline CodingKey build_coding_key(Index m, double embedding_rate, double power_cap, RngStream rng) {
  require(std::isfinite(power_cap) && power_cap > 0.0, Errc::invalid_config,
          "power cap must be > 0");
  const Index M = message_length_for(m, embedding_rate);
  CodingKey key;
  key.seed = rng.seed();
  key.stream_id = rng.stream_id();
  key.power_cap = power_cap;
  key.B = gaussian_matrix(m, M, rng);
  for (Index j = 0; j < M; ++j) key.B.col(j) /= key.B.col(j).norm();
  key.sigma_max = spectral_norm_exact(key.B);
  key.amplitude = power_cap / (key.sigma_max * std::sqrt(static_cast<double>(M)));
  return key;
}

using BitString = std::vector<int>;

struct MessageVector {
  Vector w;
  BitString bits;
};

/// bit 1 -> +a, bit 0 -> -a.
inline MessageVector encode_message(const BitString& bits, double amplitude) {
  MessageVector msg;
  msg.bits = bits;
  msg.w.resize(static_cast<Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    require(bits[i] == 0 || bits[i] == 1, Errc::invalid_message,
            "message bit " + std::to_string(i) + " is not binary");
    msg.w[static_cast<Index>(i)] = bits[i] == 1 ? amplitude : -amplitude;
  }
  return msg;
}

/// Sign decision per entry, sgn(0) = +1 -> bit 1.
inline BitString decode_bits(const Eigen::Ref<const Vector>& w) {
  BitString bits(static_cast<std::size_t>(w.size()));
  for (Index i = 0; i < w.size(); ++i) {
    require(std::isfinite(w[i]), Errc::invalid_message, "message estimate is not finite");
    bits[static_cast<std::size_t>(i)] = sign_of(w[i]) > 0 ? 1 : 0;
  }
  return bits;
}

inline BitString random_bits(Index length, RngStream& rng) {
  BitString bits(static_cast<std::size_t>(length));
  for (auto& b : bits) b = static_cast<int>(rng.next_u64() >> 63);
  return bits;
}

/// y_w = A s + B w + z. With no key (embedding disabled) the result is the
/// plain privatized measurement A s + z.
inline Vector embed(const MeasurementEnsemble& e, const Eigen::Ref<const Vector>& s,
                    const CodingKey* key, const MessageVector* msg,
                    const Eigen::Ref<const Vector>& z) {
  require_same_dim(s.size(), e.n(), "embed coefficients");
  require_same_dim(z.size(), e.m(), "embed noise");
  Vector y = e.sensing * s + z;
  if (key != nullptr) {
    require(msg != nullptr, Errc::invalid_message, "embedding enabled but no message supplied");
    require_same_dim(key->m(), e.m(), "coding key rows");
    require_same_dim(msg->w.size(), key->message_length(), "message length");
    y += key->B * msg->w;
  }
  return y;
}

}  // namespace mldpcs
