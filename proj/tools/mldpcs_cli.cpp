// mldpcs: command-line front end for synthesis, key generation, private
// publication, multi-level reconstruction and epsilon sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mldpcs/mldpcs.hpp"

namespace fs = std::filesystem;
using namespace mldpcs;
using namespace mldpcs::harness;

namespace {

// "m/6" -> max(1, round(m / 6)); "10" -> 10.
Index sparsity_from_rule(const std::string& rule, Index m) {
  if (rule.rfind("m/", 0) == 0) {
    const double k = std::stod(rule.substr(2));
    require(k > 0.0, Errc::invalid_config, "sparsity rule m/K needs K > 0");
    return std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(m) / k)));
  }
  std::size_t used = 0;
  const long long s = std::stoll(rule, &used);
  require(used == rule.size() && s >= 1, Errc::invalid_config, "sparsity rule must be m/K or a positive integer");
  return static_cast<Index>(s);
}

std::string sidecar(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  if (p.extension() == ".csv") p.replace_extension();
  return p.string() + suffix;
}

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  const std::uint64_t v = std::stoull(text, &used, 0);
  require(used == text.size(), Errc::invalid_config, "seed must be an integer (decimal or 0x hex)");
  return v;
}

std::vector<double> parse_grid(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

DatasetTable load_table(const std::string& path, const std::string& schema) {
  DatasetTable t = ingest_csv(path, parse_schema_hints(schema));
  for (const auto& w : t.warnings) std::cerr << "warning: " << w << "\n";
  return t;
}

double median_norm(const Matrix& rows) {
  Vector norms = rows.rowwise().norm();
  std::sort(norms.data(), norms.data() + norms.size());
  const Index N = norms.size();
  require(N >= 1, Errc::invalid_config, "empty table");
  return N % 2 ? norms[N / 2] : 0.5 * (norms[N / 2 - 1] + norms[N / 2]);
}

struct Options {
  std::string in, out, keys, schema, provenance, truth;
  std::string seed = "1";
  std::string sparsity_rule = "m/6";
  std::string calibration = "calibrated";
  std::string level = "l0";
  std::string normalization = "unit-column";
  std::vector<std::string> epsilon;
  std::vector<std::string> levels;
  double measurement_rate = 0.5;
  double embedding_rate = 0.2;
  double power_fraction = 0.1;
  std::optional<double> power_cap;
  std::optional<double> delta;
  Index records = 200;
  Index n = 64;
  int trials = 20;
  unsigned threads = 1;
  bool labeled = false;
  bool sparsify = false;
};

int cmd_synth(const Options& o) {
  const Index m = measurement_count(o.n, o.measurement_rate);
  const Index S = sparsity_from_rule(o.sparsity_rule, m);
  const auto t = synthesize_dataset(o.records, o.n, S, RngStream(parse_seed(o.seed), kSweepStream),
                                    SyntheticOptions{o.labeled});
  std::ostringstream csv;
  write_table_csv(csv, t);
  write_file_atomic(o.out, csv.str());
  std::cout << "wrote " << t.size() << " records x " << t.width() << " columns (S = " << S << ") to "
            << o.out << "\n";
  return 0;
}

int cmd_keygen(const Options& o) {
  KeygenConfig cfg;
  cfg.measurement_rate = o.measurement_rate;
  cfg.embedding_rate = o.embedding_rate;
  cfg.normalization = parse_normalization(o.normalization);
  if (!o.in.empty()) {
    const DatasetTable t = load_table(o.in, o.schema);
    cfg.n = t.width();
    if (cfg.embedding_rate > 0.0 && !o.power_cap) {
      // P is a fraction of the median clean measurement norm; it needs Phi,
      // so derive the measurement key first.
      KeygenConfig probe = cfg;
      probe.embedding_rate = 0.0;
      const KeyBundle mk = keygen(probe, parse_seed(o.seed));
      cfg.power_cap = o.power_fraction * median_norm(t.records * mk.ensemble->phi.transpose());
    }
  } else {
    cfg.n = o.n;
  }
  if (o.power_cap) cfg.power_cap = *o.power_cap;
  const KeyBundle b = keygen(cfg, parse_seed(o.seed));
  save_keys(b, o.out);
  std::cout << "measurement key: n = " << b.ensemble->n() << ", m = " << b.ensemble->m() << "\n";
  if (b.coding)
    std::cout << "coding key: M = " << b.coding->message_length() << ", P = " << b.coding->power_cap
              << ", a = " << b.coding->amplitude << "\n";
  else
    std::cout << "embedding disabled: no coding key written\n";
  std::cout << "keys written to " << o.out << "\n";
  return 0;
}

int cmd_publish(const Options& o) {
  const DatasetTable t = load_table(o.in, o.schema);
  // The publisher holds every key it generated.
  KeyBundle keys;
  keys.measurement_file = read_key_file((fs::path(o.keys) / kMeasurementKeyFile).string());
  keys.ensemble = ensemble_from_key(*keys.measurement_file);
  const auto cpath = fs::path(o.keys) / kCodingKeyFile;
  if (fs::exists(cpath)) {
    keys.coding_file = read_key_file(cpath.string());
    keys.coding = coding_key_from_file(*keys.coding_file);
  }
  require(o.epsilon.size() == 1, Errc::invalid_config, "publish takes exactly one --epsilon");
  PublishConfig cfg;
  cfg.epsilon = parse_grid(o.epsilon).at(0);
  cfg.calibration = parse_calibration(o.calibration);
  const RngStream root(parse_seed(o.seed), 0);
  cfg.noise_seed = root.derive(kNoiseStream).next_u64();
  cfg.message_seed = root.derive(kMessageStream).next_u64();
  if (o.sparsify) cfg.sparsify = sparsity_from_rule(o.sparsity_rule, keys.ensemble->m());
  const PublishedTable pub = publish(t.records, *keys.ensemble, keys.coding ? &*keys.coding : nullptr, cfg, o.threads);
  write_file_atomic(o.out, matrix_to_csv(pub.values, "y_"));
  write_file_atomic(sidecar(o.out, ".provenance.json"), to_json(pub.provenance).dump(2) + "\n");
  if (!pub.messages.empty()) write_file_atomic(sidecar(o.out, ".messages.csv"), messages_to_csv(pub.messages));
  std::cout << "published " << pub.values.rows() << " records x " << pub.values.cols()
            << " measurements (" << pub.provenance.calibration << ", scale " << pub.provenance.scale
            << ") to " << o.out << "\n";
  return 0;
}

int cmd_reconstruct(const Options& o) {
  const Matrix published = matrix_from_csv(o.in);
  const std::string prov_path = o.provenance.empty() ? sidecar(o.in, ".provenance.json") : o.provenance;
  const Provenance prov = provenance_from_json(nlohmann::json::parse(read_file(prov_path)));
  const AuthorizationLevel level = parse_level(o.level);
  const KeyBundle keys = load_keys(o.keys, level, prov.embedding);
  ReconstructOptions ro;
  ro.level = level;
  ro.delta = o.delta;
  ro.threads = o.threads;
  const RecoveredTable rec = reconstruct_table(published, prov, keys, ro);
  write_file_atomic(o.out, matrix_to_csv(rec.values, level == AuthorizationLevel::l0 ? "y_" : "x_"));
  if (level != AuthorizationLevel::l0)
    write_file_atomic(sidecar(o.out, ".diagnostics.csv"), diagnostics_to_csv(rec));
  std::cout << "level " << to_string(level) << ": " << rec.values.rows() << " records x " << rec.values.cols()
            << " columns to " << o.out;
  if (level != AuthorizationLevel::l0)
    std::cout << " (delta " << rec.delta << ", non-converged " << rec.nonconverged() << ")";
  std::cout << "\n";
  if (!o.truth.empty() && level != AuthorizationLevel::l0) {
    const DatasetTable truth = load_table(o.truth, o.schema);
    std::cout << "mean l2 error: " << l2_error_metric(truth.records, rec.values).mean << "\n";
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  SweepConfig cfg;
  if (!o.epsilon.empty()) cfg.epsilons = parse_grid(o.epsilon);
  cfg.records = o.records;
  cfg.n = o.n;
  cfg.measurement_rate = o.measurement_rate;
  cfg.embedding_rate = o.embedding_rate;
  cfg.power_fraction = o.power_fraction;
  cfg.calibration = parse_calibration(o.calibration);
  cfg.normalization = parse_normalization(o.normalization);
  cfg.trials = o.trials;
  cfg.master_seed = parse_seed(o.seed);
  cfg.labeled = o.labeled;
  cfg.sparsify_records = o.sparsify;
  cfg.threads = o.threads;
  if (!o.levels.empty()) {
    cfg.levels.clear();
    for (const auto& item : o.levels) {
      std::stringstream ss(item);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) cfg.levels.push_back(parse_level(tok));
    }
  }
  std::optional<DatasetTable> table;
  if (!o.in.empty()) {
    table = load_table(o.in, o.schema);
    cfg.table = &*table;
    cfg.n = table->width();
    cfg.records = table->size();
  }
  cfg.sparsity = sparsity_from_rule(o.sparsity_rule, cfg.m());
  const ExperimentReport report = sweep(cfg);
  write_report(report, o.out);
  std::cout << "sweep: " << report.rows.size() << " rows, " << report.failures.size() << " failed cells -> "
            << o.out << ".csv, " << o.out << ".json\n";
  return report.failures.empty() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mldpcs: differentially private compressive-sensing publication with watermarking"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Master seed (decimal or 0x hex)");
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 256u));
  };
  auto add_shape = [&](CLI::App* sub) {
    sub->add_option("--measurement-rate", o.measurement_rate, "m / n")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--sparsity-rule", o.sparsity_rule, "Sparsity S: 'm/K' or an integer");
  };

  auto* synth = app.add_subcommand("synth", "Write a synthetic sparse dataset");
  add_common(synth);
  add_shape(synth);
  synth->add_option("--out", o.out, "Output CSV")->required();
  synth->add_option("--records", o.records, "Number of records")->check(CLI::PositiveNumber);
  synth->add_option("--n", o.n, "Record width")->check(CLI::Range(4, 1 << 20));
  synth->add_flag("--labeled", o.labeled, "Add a binary class label column");

  auto* keygen_cmd = app.add_subcommand("keygen", "Generate measurement and coding key files");
  add_common(keygen_cmd);
  add_shape(keygen_cmd);
  keygen_cmd->add_option("--in", o.in, "Dataset CSV (sets n and the power cap)");
  keygen_cmd->add_option("--schema", o.schema, "Column hints name:kind,...");
  keygen_cmd->add_option("--n", o.n, "Record width when --in is not given");
  keygen_cmd->add_option("--embedding-rate", o.embedding_rate, "M / m; 0 disables the watermark");
  keygen_cmd->add_option("--power-fraction", o.power_fraction, "P as a fraction of the median ||Phi x||");
  keygen_cmd->add_option("--power-cap", o.power_cap, "Absolute power cap P (overrides --power-fraction)");
  keygen_cmd->add_option("--normalization", o.normalization, "unit-column or raw-scaled");
  keygen_cmd->add_option("--out", o.out, "Key directory")->required();

  auto* publish_cmd = app.add_subcommand("publish", "Privatize and watermark a dataset");
  add_common(publish_cmd);
  publish_cmd->add_option("--in", o.in, "Dataset CSV")->required();
  publish_cmd->add_option("--schema", o.schema, "Column hints name:kind,...");
  publish_cmd->add_option("--keys", o.keys, "Key directory")->required();
  publish_cmd->add_option("--epsilon", o.epsilon, "Privacy budget")->required();
  publish_cmd->add_option("--calibration", o.calibration, "paper or calibrated");
  publish_cmd->add_option("--sparsity-rule", o.sparsity_rule, "Sparsity used with --sparsify");
  publish_cmd->add_flag("--sparsify", o.sparsify, "Keep only the S largest DCT coefficients");
  publish_cmd->add_option("--out", o.out, "Published CSV")->required();

  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Recover a published table");
  add_common(reconstruct_cmd);
  reconstruct_cmd->add_option("--in", o.in, "Published CSV")->required();
  reconstruct_cmd->add_option("--provenance", o.provenance, "Provenance JSON (default: sidecar of --in)");
  reconstruct_cmd->add_option("--keys", o.keys, "Key directory");
  reconstruct_cmd->add_option("--level", o.level, "l0, l1 or l2");
  reconstruct_cmd->add_option("--delta", o.delta, "Constraint radius (default: from provenance)");
  reconstruct_cmd->add_option("--truth", o.truth, "Original CSV; prints the mean L2 error");
  reconstruct_cmd->add_option("--schema", o.schema, "Column hints for --truth");
  reconstruct_cmd->add_option("--out", o.out, "Recovered CSV")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Epsilon sweep with tidy CSV and JSON summary");
  add_common(sweep_cmd);
  add_shape(sweep_cmd);
  sweep_cmd->add_option("--epsilon", o.epsilon, "Epsilon grid (comma separated or repeated)");
  sweep_cmd->add_option("--trials", o.trials, "Trials per epsilon")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--records", o.records, "Synthetic records per trial");
  sweep_cmd->add_option("--n", o.n, "Synthetic record width");
  sweep_cmd->add_option("--in", o.in, "Use this dataset instead of synthetic data");
  sweep_cmd->add_option("--schema", o.schema, "Column hints name:kind,...");
  sweep_cmd->add_option("--embedding-rate", o.embedding_rate, "M / m; 0 disables the watermark");
  sweep_cmd->add_option("--power-fraction", o.power_fraction, "P as a fraction of the median ||Phi x||");
  sweep_cmd->add_option("--calibration", o.calibration, "paper or calibrated");
  sweep_cmd->add_option("--normalization", o.normalization, "unit-column or raw-scaled");
  sweep_cmd->add_option("--level", o.levels, "Levels to evaluate (default l0,l1,l2)");
  sweep_cmd->add_flag("--labeled", o.labeled, "Synthesize labels and report SVM misclassification");
  sweep_cmd->add_flag("--sparsify", o.sparsify, "Publish only the S largest DCT coefficients");
  sweep_cmd->add_option("--out", o.out, "Output prefix (<out>.csv, <out>.json)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(o);
    if (*keygen_cmd) return cmd_keygen(o);
    if (*publish_cmd) return cmd_publish(o);
    if (*reconstruct_cmd) return cmd_reconstruct(o);
    if (*sweep_cmd) return cmd_sweep(o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return e.code() == Errc::authorization ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
