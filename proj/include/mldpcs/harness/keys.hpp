#pragma once

// Key lifecycle. A key file holds only the seed and shape parameters needed
// to regenerate the secret matrix; raw matrix bytes are never written.
//
//   # mldpcs key file
//   version=1
//   kind=measurement
//   seed=0x00000000000000a1
//   n=64
//   m=32
//   M=6
//   normalization=unit-column
//   power_cap=0.12
//   amplitude=0.0213
//
// A measurement key regenerates Phi from (seed, kMeasurementStream); a coding
// key regenerates B from (seed, kCodingStream). `amplitude` on a coding key is
// a check value: the loader recomputes it from B and rejects a mismatch.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "mldpcs/embedding.hpp"
#include "mldpcs/error.hpp"
#include "mldpcs/reconstruct.hpp"
#include "mldpcs/sensing.hpp"

namespace mldpcs::harness {

inline constexpr int kKeyFormatVersion = 1;
inline constexpr std::uint64_t kMeasurementStream = 1;
inline constexpr std::uint64_t kCodingStream = 2;
inline constexpr const char* kMeasurementKeyFile = "measurement.key";
inline constexpr const char* kCodingKeyFile = "coding.key";

enum class KeyKind { measurement, coding };

inline const char* to_string(KeyKind kind) {
  return kind == KeyKind::measurement ? "measurement" : "coding";
}

struct KeyFile {
  int version = kKeyFormatVersion;
  KeyKind kind = KeyKind::measurement;
  std::uint64_t seed = 0;
  Index n = 0;
  Index m = 0;
  Index M = 0;
  Normalization normalization = Normalization::unit_column;
  double power_cap = 0.0;
  double amplitude = 0.0;
};

inline std::string format_hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, v);
  return buf;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string serialize_key(const KeyFile& k) {
  std::ostringstream out;
  out << "# mldpcs key file\n"
      << "version=" << k.version << "\n"
      << "kind=" << to_string(k.kind) << "\n"
      << "seed=" << format_hex(k.seed) << "\n"
      << "n=" << k.n << "\n"
      << "m=" << k.m << "\n"
      << "M=" << k.M << "\n"
      << "normalization=" << to_string(k.normalization) << "\n"
      << "power_cap=" << format_double(k.power_cap) << "\n"
      << "amplitude=" << format_double(k.amplitude) << "\n";
  return out.str();
}

inline KeyFile parse_key(std::istream& in) {
  std::map<std::string, std::string> fields;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::parse, "key file line " + std::to_string(line_no) + " is not key=value");
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& name) -> const std::string& {
    const auto it = fields.find(name);
    if (it == fields.end()) throw Error(Errc::parse, "key file lacks field '" + name + "'");
    return it->second;
  };
  auto to_index = [&](const std::string& name) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(get(name), &used);
      if (used != get(name).size() || v < 0) throw std::invalid_argument(name);
      return static_cast<Index>(v);
    } catch (const std::logic_error&) {
      throw Error(Errc::parse, "key file field '" + name + "' is not a non-negative integer");
    }
  };
  auto to_double = [&](const std::string& name) {
    try {
      std::size_t used = 0;
      const double v = std::stod(get(name), &used);
      if (used != get(name).size()) throw std::invalid_argument(name);
      return v;
    } catch (const std::logic_error&) {
      throw Error(Errc::parse, "key file field '" + name + "' is not a number");
    }
  };

  KeyFile k;
  k.version = static_cast<int>(to_index("version"));
  if (k.version != kKeyFormatVersion)
    throw Error(Errc::parse, "unsupported key file version " + std::to_string(k.version));
  const std::string& kind = get("kind");
  if (kind == "measurement") k.kind = KeyKind::measurement;
  else if (kind == "coding") k.kind = KeyKind::coding;
  else throw Error(Errc::parse, "unknown key kind '" + kind + "'");
  const std::string& seed = get("seed");
  try {
    std::size_t used = 0;
    k.seed = std::stoull(seed, &used, 16);
    if (used != seed.size()) throw std::invalid_argument("seed");
  } catch (const std::logic_error&) {
    throw Error(Errc::parse, "key file seed '" + seed + "' is not hex");
  }
  k.n = to_index("n");
  k.m = to_index("m");
  k.M = to_index("M");
  try {
    k.normalization = parse_normalization(get("normalization"));
  } catch (const Error& e) {
    throw Error(Errc::parse, e.what());
  }
  k.power_cap = to_double("power_cap");
  k.amplitude = to_double("amplitude");
  return k;
}

inline void write_key_file(const std::string& path, const KeyFile& k) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write key file '" + path + "'");
  out << serialize_key(k);
  if (!out) throw Error(Errc::io, "write failed for '" + path + "'");
}

inline KeyFile read_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open key file '" + path + "'");
  return parse_key(in);
}

/// Regenerates the measurement ensemble described by a key file.
inline MeasurementEnsemble ensemble_from_key(const KeyFile& k) {
  require(k.kind == KeyKind::measurement, Errc::invalid_config, "not a measurement key");
  require(k.n >= 4 && k.m >= 2 && k.m < k.n, Errc::parse, "measurement key has invalid shape");
  const double rate = static_cast<double>(k.m) / static_cast<double>(k.n);
  auto e = build_ensemble(k.n, rate, k.normalization, RngStream(k.seed, kMeasurementStream));
  require(e.m() == k.m, Errc::parse, "measurement key shape does not round-trip");
  return e;
}

namespace detail {

inline CodingKey regenerate_coding_key(const KeyFile& k) {
  require(k.kind == KeyKind::coding, Errc::invalid_config, "not a coding key");
  require(k.m >= 2 && k.M >= 1 && k.M < k.m, Errc::parse, "coding key has invalid shape");
  require(k.power_cap > 0.0, Errc::parse, "coding key power cap must be > 0");
  const double rate = static_cast<double>(k.M) / static_cast<double>(k.m);
  CodingKey key = build_coding_key(k.m, rate, k.power_cap, RngStream(k.seed, kCodingStream));
  require(key.message_length() == k.M, Errc::parse, "coding key shape does not round-trip");
  return key;
}

}  // namespace detail

inline CodingKey coding_key_from_file(const KeyFile& k) {
  CodingKey key = detail::regenerate_coding_key(k);
  require(std::abs(key.amplitude - k.amplitude) <= 1e-9 * std::max(1.0, std::abs(k.amplitude)),
          Errc::parse, "coding key amplitude does not match its regenerated matrix");
  return key;
}

struct KeygenConfig {
  Index n = 0;
  double measurement_rate = 0.5;
  double embedding_rate = 0.2;  // 0 disables the coding key
  double power_cap = 0.0;       // absolute P; must be > 0 when embedding
  Normalization normalization = Normalization::unit_column;
};

/// The in-memory key material of one party.
struct KeyBundle {
  std::optional<KeyFile> measurement_file;
  std::optional<KeyFile> coding_file;
  std::optional<MeasurementEnsemble> ensemble;
  std::optional<CodingKey> coding;
};

/// Derives both key seeds from a master seed. Distinct master seeds give
/// distinct keys; the same master seed always gives the same keys.
inline KeyBundle keygen(const KeygenConfig& cfg, std::uint64_t master_seed) {
  const RngStream master(master_seed, 0);
  KeyBundle b;
  KeyFile mk;
  mk.kind = KeyKind::measurement;
  mk.seed = master.derive(kMeasurementStream).next_u64();
  mk.n = cfg.n;
  mk.m = measurement_count(cfg.n, cfg.measurement_rate);
  mk.normalization = cfg.normalization;
  if (cfg.embedding_rate > 0.0) mk.M = message_length_for(mk.m, cfg.embedding_rate);
  b.ensemble = ensemble_from_key(mk);
  b.measurement_file = mk;
  if (cfg.embedding_rate > 0.0) {
    require(cfg.power_cap > 0.0, Errc::invalid_config, "embedding needs a power cap > 0");
    KeyFile ck = mk;
    ck.kind = KeyKind::coding;
    ck.seed = master.derive(kCodingStream).next_u64();
    ck.power_cap = cfg.power_cap;
    b.coding = detail::regenerate_coding_key(ck);
    ck.amplitude = b.coding->amplitude;
    b.coding_file = ck;
  }
  return b;
}

inline void save_keys(const KeyBundle& b, const std::string& dir) {
  std::filesystem::create_directories(dir);
  if (b.measurement_file)
    write_key_file((std::filesystem::path(dir) / kMeasurementKeyFile).string(), *b.measurement_file);
  if (b.coding_file)
    write_key_file((std::filesystem::path(dir) / kCodingKeyFile).string(), *b.coding_file);
}

/// Loads what `level` needs from `dir` and nothing more. L0 needs no keys;
/// L1 needs the measurement key; L2 needs both, unless `embedding` is false
/// (the publication carried no watermark). A missing key is an authorization
/// error; an L1 load never exposes the coding key even when present.
inline KeyBundle load_keys(const std::string& dir, AuthorizationLevel level, bool embedding = true) {
  KeyBundle b;
  if (level == AuthorizationLevel::l0) return b;
  const auto mpath = std::filesystem::path(dir) / kMeasurementKeyFile;
  if (dir.empty() || !std::filesystem::exists(mpath))
    throw Error(Errc::authorization, std::string("level ") + to_string(level) +
                                         " requires the measurement key (" + mpath.string() + ")");
  b.measurement_file = read_key_file(mpath.string());
  require(b.measurement_file->kind == KeyKind::measurement, Errc::parse,
          mpath.string() + " is not a measurement key");
  b.ensemble = ensemble_from_key(*b.measurement_file);
  if (level == AuthorizationLevel::l1 || !embedding) return b;
  const auto cpath = std::filesystem::path(dir) / kCodingKeyFile;
  if (!std::filesystem::exists(cpath))
    throw Error(Errc::authorization, "level l2 requires the coding key (" + cpath.string() + ")");
  b.coding_file = read_key_file(cpath.string());
  require(b.coding_file->kind == KeyKind::coding, Errc::parse, cpath.string() + " is not a coding key");
  b.coding = coding_key_from_file(*b.coding_file);
  require(b.coding->m() == b.ensemble->m(), Errc::dimension_mismatch,
          "coding key m does not match measurement key m");
  return b;
}

}  // namespace mldpcs::harness
