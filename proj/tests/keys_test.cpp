#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mldpcs/harness/keys.hpp"

namespace mldpcs::harness {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mldpcs_keys_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

KeygenConfig default_config() {
  KeygenConfig cfg;
  cfg.n = 64;
  cfg.power_cap = 0.4;
  return cfg;
}

TEST(KeyFile, SerializeParseRoundTrip) {
  KeyFile k;
  k.kind = KeyKind::coding;
  k.seed = 0xdeadbeefcafef00dULL;
  k.n = 64;
  k.m = 32;
  k.M = 6;
  k.normalization = Normalization::raw_scaled;
  k.power_cap = 0.1 + 0.2;
  k.amplitude = 1.0 / 3.0;
  const std::string text = serialize_key(k);
  EXPECT_NE(text.find("seed=0xdeadbeefcafef00d"), std::string::npos);
  std::istringstream in(text);
  const KeyFile back = parse_key(in);
  EXPECT_EQ(back.kind, k.kind);
  EXPECT_EQ(back.seed, k.seed);
  EXPECT_EQ(back.m, 32);
  EXPECT_EQ(back.M, 6);
  EXPECT_EQ(back.normalization, Normalization::raw_scaled);
  EXPECT_EQ(back.power_cap, k.power_cap);  // %.17g round-trips exactly
  EXPECT_EQ(back.amplitude, k.amplitude);
}

TEST(KeyFile, ContainsNoMatrixData) {
  const KeyBundle b = keygen(default_config(), 7);
  const std::string text = serialize_key(*b.coding_file) + serialize_key(*b.measurement_file);
  std::istringstream in(text);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 2 * 10);  // comment + 9 fields each
}

TEST(KeyFile, MalformedInputsRejected) {
  auto parse_text = [](const std::string& t) {
    std::istringstream in(t);
    return parse_key(in);
  };
  const std::string good = serialize_key(*keygen(default_config(), 1).measurement_file);
  EXPECT_NO_THROW(parse_text(good));
  std::string bad_version = good;
  bad_version.replace(bad_version.find("version=1"), 9, "version=9");
  EXPECT_THROW(parse_text(bad_version), Error);
  std::string no_seed = good;
  no_seed.erase(no_seed.find("seed="), no_seed.find('\n', no_seed.find("seed=")) - no_seed.find("seed=") + 1);
  EXPECT_THROW(parse_text(no_seed), Error);
  EXPECT_THROW(parse_text(good + "garbage line\n"), Error);
}

TEST(Keygen, LoadedEnsemblesIdenticalToOriginals) {
  const auto dir = scratch("roundtrip");
  const KeyBundle b = keygen(default_config(), 42);
  save_keys(b, dir.string());
  const KeyBundle l2 = load_keys(dir.string(), AuthorizationLevel::l2);
  EXPECT_EQ(l2.ensemble->phi, b.ensemble->phi);
  EXPECT_EQ(l2.ensemble->sensing, b.ensemble->sensing);
  EXPECT_EQ(l2.coding->B, b.coding->B);
  EXPECT_EQ(l2.coding->amplitude, b.coding->amplitude);
  EXPECT_EQ(l2.coding->message_length(), 6);
}

TEST(Keygen, DistinctMasterSeedsGiveDistinctKeys) {
  const KeyBundle a = keygen(default_config(), 1), b = keygen(default_config(), 2);
  EXPECT_NE(a.measurement_file->seed, b.measurement_file->seed);
  EXPECT_NE(a.coding_file->seed, b.coding_file->seed);
  EXPECT_NE(a.ensemble->phi, b.ensemble->phi);
  EXPECT_NE(a.coding->B, b.coding->B);
  EXPECT_NE(a.measurement_file->seed, a.coding_file->seed);
}

TEST(Keygen, EmbeddingDisabledWritesNoCodingKey) {
  KeygenConfig cfg = default_config();
  cfg.embedding_rate = 0.0;
  const KeyBundle b = keygen(cfg, 3);
  EXPECT_FALSE(b.coding.has_value());
  const auto dir = scratch("noembed");
  save_keys(b, dir.string());
  EXPECT_FALSE(fs::exists(dir / kCodingKeyFile));
  EXPECT_THROW(load_keys(dir.string(), AuthorizationLevel::l2), Error);
  EXPECT_NO_THROW(load_keys(dir.string(), AuthorizationLevel::l2, /*embedding=*/false));
}

TEST(Loader, EnforcesLevelCapabilities) {
  const auto full = scratch("full");
  const auto l1_only = scratch("l1");
  const KeyBundle b = keygen(default_config(), 5);
  save_keys(b, full.string());
  KeyBundle measurement_only = b;
  measurement_only.coding_file.reset();
  save_keys(measurement_only, l1_only.string());

  EXPECT_FALSE(load_keys("", AuthorizationLevel::l0).ensemble.has_value());

  const auto l1 = load_keys(full.string(), AuthorizationLevel::l1);
  EXPECT_TRUE(l1.ensemble.has_value());
  EXPECT_FALSE(l1.coding.has_value());  // never exposed at level 1

  EXPECT_NO_THROW(load_keys(l1_only.string(), AuthorizationLevel::l1));
  try {
    load_keys(l1_only.string(), AuthorizationLevel::l2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::authorization);
  }
  try {
    load_keys(scratch("empty").string(), AuthorizationLevel::l1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::authorization);
  }
}

TEST(Loader, TamperedAmplitudeRejected) {
  const auto dir = scratch("tamper");
  KeyBundle b = keygen(default_config(), 9);
  b.coding_file->amplitude *= 1.01;
  save_keys(b, dir.string());
  EXPECT_THROW(load_keys(dir.string(), AuthorizationLevel::l2), Error);
}

TEST(Loader, SwappedFilesRejected) {
  const auto dir = scratch("swap");
  KeyBundle b = keygen(default_config(), 11);
  std::swap(b.measurement_file, b.coding_file);
  save_keys(b, dir.string());
  EXPECT_THROW(load_keys(dir.string(), AuthorizationLevel::l1), Error);
}

}  // namespace
}  // namespace mldpcs::harness
