#pragma once

// End-to-end publication and reconstruction of whole tables.
//
// publish: per record, analyze -> (optional sparsify) -> sample -> privatize
// -> embed, plus a provenance record that is enough to re-derive every
// random draw. reconstruct_table dispatches each record to the decoder for
// the requested authorization level.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "mldpcs/embedding.hpp"
#include "mldpcs/harness/io.hpp"
#include "mldpcs/harness/keys.hpp"
#include "mldpcs/privacy.hpp"
#include "mldpcs/reconstruct.hpp"
#include "mldpcs/sensing.hpp"

namespace mldpcs::harness {

inline constexpr std::uint64_t kNoiseStream = 3;
inline constexpr std::uint64_t kMessageStream = 4;

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written by index so the outcome is independent of scheduling. The
/// first exception (lowest index) is rethrown after all workers finish.
template <class Body>
void parallel_for(Index count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<Index>(count, 1))));
  if (threads == 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::mutex mu;
  Index failed_at = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (Index i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct PublishConfig {
  double epsilon = 1.0;
  CalibrationMode calibration = CalibrationMode::calibrated;
  std::optional<Index> sparsify;  // keep the S largest coefficients (synthetic mode)
  std::uint64_t noise_seed = 0;
  std::uint64_t message_seed = 0;
};

struct Provenance {
  std::string calibration = "calibrated";
  double epsilon = 0.0;
  double scale = 0.0;
  double sensitivity = 0.0;
  double default_delta = 0.0;
  Index records = 0;
  Index n = 0;
  Index m = 0;
  Index M = 0;
  bool embedding = false;
  std::optional<Index> sparsify;
  std::string normalization = "unit-column";
  std::uint64_t measurement_seed = 0;
  std::optional<std::uint64_t> coding_seed;
  std::uint64_t noise_seed = 0;
  std::uint64_t message_seed = 0;
  double power_cap = 0.0;
  double amplitude = 0.0;
};

inline nlohmann::json to_json(const Provenance& p) {
  nlohmann::json j;
  j["format"] = "mldpcs-provenance";
  j["version"] = 1;
  j["calibration"] = p.calibration;
  j["epsilon"] = p.epsilon;
  j["scale"] = p.scale;
  j["sensitivity"] = p.sensitivity;
  j["default_delta"] = p.default_delta;
  j["records"] = p.records;
  j["n"] = p.n;
  j["m"] = p.m;
  j["M"] = p.M;
  j["embedding"] = p.embedding;
  j["sparsify"] = p.sparsify ? nlohmann::json(*p.sparsify) : nlohmann::json(nullptr);
  j["normalization"] = p.normalization;
  j["measurement_seed"] = format_hex(p.measurement_seed);
  j["coding_seed"] = p.coding_seed ? nlohmann::json(format_hex(*p.coding_seed)) : nlohmann::json(nullptr);
  j["noise_seed"] = format_hex(p.noise_seed);
  j["message_seed"] = format_hex(p.message_seed);
  j["power_cap"] = p.power_cap;
  j["amplitude"] = p.amplitude;
  return j;
}

inline Provenance provenance_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "mldpcs-provenance" || j.at("version") != 1)
      throw Error(Errc::parse, "not an mldpcs provenance file (version 1)");
    auto hex = [](const nlohmann::json& v) { return std::stoull(v.get<std::string>(), nullptr, 16); };
    Provenance p;
    p.calibration = j.at("calibration").get<std::string>();
    p.epsilon = j.at("epsilon").get<double>();
    p.scale = j.at("scale").get<double>();
    p.sensitivity = j.at("sensitivity").get<double>();
    p.default_delta = j.at("default_delta").get<double>();
    p.records = j.at("records").get<Index>();
    p.n = j.at("n").get<Index>();
    p.m = j.at("m").get<Index>();
    p.M = j.at("M").get<Index>();
    p.embedding = j.at("embedding").get<bool>();
    if (!j.at("sparsify").is_null()) p.sparsify = j.at("sparsify").get<Index>();
    p.normalization = j.at("normalization").get<std::string>();
    p.measurement_seed = hex(j.at("measurement_seed"));
    if (!j.at("coding_seed").is_null()) p.coding_seed = hex(j.at("coding_seed"));
    p.noise_seed = hex(j.at("noise_seed"));
    p.message_seed = hex(j.at("message_seed"));
    p.power_cap = j.at("power_cap").get<double>();
    p.amplitude = j.at("amplitude").get<double>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("provenance: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(Errc::parse, std::string("provenance: ") + e.what());
  }
}

struct PublishedTable {
  Matrix values;  // N x m
  Provenance provenance;
  std::vector<BitString> messages;  // publisher-private; empty without embedding
};

/// `key` may be null (embedding disabled). Any failure is rethrown tagged
/// with the offending record index.
inline PublishedTable publish(const Eigen::Ref<const Matrix>& records, const MeasurementEnsemble& ens,
                              const CodingKey* key, const PublishConfig& cfg, unsigned threads = 1) {
  require(records.cols() == ens.n(), Errc::dimension_mismatch,
          "table has " + std::to_string(records.cols()) + " columns, measurement key expects n = " +
              std::to_string(ens.n()));
  if (key != nullptr) require_same_dim(key->m(), ens.m(), "coding key rows");
  const PrivacyBudget budget(cfg.epsilon);
  const NoiseCalibration cal = calibrate(cfg.calibration, budget, ens.phi);

  PublishedTable out;
  Provenance& p = out.provenance;
  p.calibration = to_string(cal.mode);
  p.epsilon = cal.epsilon;
  p.scale = cal.scale;
  p.sensitivity = cal.sensitivity;
  p.default_delta = default_delta(cal, ens.m());
  p.records = records.rows();
  p.n = ens.n();
  p.m = ens.m();
  p.M = key ? key->message_length() : 0;
  p.embedding = key != nullptr;
  p.sparsify = cfg.sparsify;
  p.normalization = to_string(ens.normalization);
  p.measurement_seed = ens.seed;
  if (key) p.coding_seed = key->seed;
  p.noise_seed = cfg.noise_seed;
  p.message_seed = cfg.message_seed;
  p.power_cap = key ? key->power_cap : 0.0;
  p.amplitude = key ? key->amplitude : 0.0;

  const Index N = records.rows();
  out.values.resize(N, ens.m());
  if (key) out.messages.resize(static_cast<std::size_t>(N));
  const RngStream noise_root(cfg.noise_seed, kNoiseStream);
  const RngStream message_root(cfg.message_seed, kMessageStream);
  parallel_for(N, threads, [&](Index i) {
    try {
      Vector s = analyze(ens, records.row(i).transpose());
      if (cfg.sparsify) s = sparsify(s, SparsityProfile{*cfg.sparsify});
      RngStream noise = noise_root.derive(static_cast<std::uint64_t>(i));
      const auto priv = privatize(ens.sensing * s, budget, cal, noise);
      if (key) {
        RngStream mrng = message_root.derive(static_cast<std::uint64_t>(i));
        const auto msg = encode_message(random_bits(key->message_length(), mrng), key->amplitude);
        out.values.row(i) = embed(ens, s, key, &msg, priv.noise).transpose();
        out.messages[static_cast<std::size_t>(i)] = msg.bits;
      } else {
        out.values.row(i) = priv.y_tilde.transpose();
      }
    } catch (const Error& e) {
      throw Error(e.code(), "record " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

struct ReconstructOptions {
  AuthorizationLevel level = AuthorizationLevel::l0;
  std::optional<double> delta;            // default: provenance default_delta
  std::optional<double> projected_delta;  // default: delta sqrt(T / m)
  SolverConfig solver;
  unsigned threads = 1;
};

struct RecordDiagnostics {
  bool converged = true;
  double residual_norm = 0.0;  // final solve
  double kkt_violation = 0.0;
  double lambda = 0.0;
  int inner_iterations = 0;
  std::optional<BitString> bits;
};

struct RecoveredTable {
  AuthorizationLevel level = AuthorizationLevel::l0;
  Matrix values;  // N x m at L0, N x n otherwise
  double delta = 0.0;
  double projected_delta = 0.0;
  std::vector<RecordDiagnostics> diagnostics;

  Index nonconverged() const {
    return std::count_if(diagnostics.begin(), diagnostics.end(),
                         [](const RecordDiagnostics& d) { return !d.converged; });
  }
};

/// Keys must match both the claimed level and the publication: a level the
/// bundle cannot serve, or a key whose seed differs from the provenance, is an
/// authorization error.
inline void check_authorization(const Provenance& p, const KeyBundle& keys, AuthorizationLevel level) {
  if (level == AuthorizationLevel::l0) return;
  if (!keys.ensemble)
    throw Error(Errc::authorization, std::string("level ") + to_string(level) + " requires the measurement key");
  if (keys.ensemble->seed != p.measurement_seed || keys.ensemble->m() != p.m || keys.ensemble->n() != p.n)
    throw Error(Errc::authorization, "measurement key does not belong to this publication");
  if (level == AuthorizationLevel::l2 && p.embedding) {
    if (!keys.coding) throw Error(Errc::authorization, "level l2 requires the coding key");
    if (!p.coding_seed || keys.coding->seed != *p.coding_seed)
      throw Error(Errc::authorization, "coding key does not belong to this publication");
  }
}

inline RecoveredTable reconstruct_table(const Eigen::Ref<const Matrix>& published, const Provenance& p,
                                        const KeyBundle& keys, const ReconstructOptions& opt) {
  require(published.cols() == p.m, Errc::dimension_mismatch,
          "published table has " + std::to_string(published.cols()) + " columns, provenance says m = " +
              std::to_string(p.m));
  check_authorization(p, keys, opt.level);
  RecoveredTable out;
  out.level = opt.level;
  const Index N = published.rows();
  out.diagnostics.resize(static_cast<std::size_t>(N));
  if (opt.level == AuthorizationLevel::l0) {
    out.values = published;
    return out;
  }
  const double delta = opt.delta.value_or(p.default_delta);
  require(delta >= 0.0, Errc::invalid_config, "delta must be >= 0");
  out.delta = delta;
  const MeasurementEnsemble& ens = *keys.ensemble;
  out.values.resize(N, ens.n());

  auto record = [&](Index i, const ReconstructionResult& r) {
    out.values.row(i) = r.x_star->transpose();
    auto& d = out.diagnostics[static_cast<std::size_t>(i)];
    d.converged = r.converged();
    const auto& last = r.certificates.back();
    d.residual_norm = last.residual_norm;
    d.kkt_violation = last.kkt_violation;
    d.lambda = last.lambda;
    for (const auto& c : r.certificates) d.inner_iterations += c.inner_iterations;
    d.bits = r.bits;
  };

  if (opt.level == AuthorizationLevel::l2 && p.embedding) {
    const FullDecoder full(ens, *keys.coding, opt.solver);
    out.projected_delta = opt.projected_delta.value_or(full.projected_delta_for(delta));
    parallel_for(N, opt.threads, [&](Index i) {
      record(i, full(published.row(i).transpose(), delta, out.projected_delta));
    });
  } else {
    const SemiDecoder semi(ens, opt.solver);
    parallel_for(N, opt.threads, [&](Index i) { record(i, semi(published.row(i).transpose(), delta)); });
  }
  return out;
}

inline std::string diagnostics_to_csv(const RecoveredTable& t) {
  std::string out = "rec_id,converged,residual_norm,kkt_violation,lambda,inner_iterations,bits\n";
  for (std::size_t i = 0; i < t.diagnostics.size(); ++i) {
    const auto& d = t.diagnostics[i];
    std::string bits;
    if (d.bits)
      for (int b : *d.bits) bits += static_cast<char>('0' + b);
    out += std::to_string(i) + "," + (d.converged ? "1" : "0") + "," + format_real(d.residual_norm) +
           "," + format_real(d.kkt_violation) + "," + format_real(d.lambda) + "," +
           std::to_string(d.inner_iterations) + "," + bits + "\n";
  }
  return out;
}

inline std::string messages_to_csv(const std::vector<BitString>& messages) {
  std::string out = "rec_id,bits\n";
  for (std::size_t i = 0; i < messages.size(); ++i) {
    out += std::to_string(i) + ",";
    for (int b : messages[i]) out += static_cast<char>('0' + b);
    out += "\n";
  }
  return out;
}

}  // namespace mldpcs::harness
