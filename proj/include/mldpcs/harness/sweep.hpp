#pragma once

// Epsilon sweeps over synthetic (or supplied) tables.
//
// Trial t owns the stream RngStream(master_seed, kSweepStream).derive(t), from
// which it draws its dataset, keys, train/test split, noise seed and message
// seed. Those are shared by every epsilon of the trial (matched designs), so
// consecutive epsilons differ only in the noise scale. Trials run in
// parallel; rows are assembled in a fixed order afterwards, so output bytes do
// not depend on the thread count.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "mldpcs/harness/dataset.hpp"
#include "mldpcs/harness/io.hpp"
#include "mldpcs/harness/keys.hpp"
#include "mldpcs/harness/metrics.hpp"
#include "mldpcs/harness/pipeline.hpp"
#include "mldpcs/harness/svm.hpp"

namespace mldpcs::harness {

inline constexpr std::uint64_t kSweepStream = 0x5eed;

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"l2_error", "misclassification", "bit_error_rate",
                                                 "nonconverged"};
  return names;
}

/// The documented CSV column set.
inline const char* kReportCsvHeader = "epsilon,level,trial,metric,value,master_seed,stream_id,calibration";

struct SweepConfig {
  std::vector<double> epsilons = {0.01, 0.05, 0.1, 0.4, 0.8, 1.6};
  Index records = 200;
  Index n = 64;
  double measurement_rate = 0.5;
  double embedding_rate = 0.2;  // 0 disables the watermark
  std::optional<Index> sparsity;  // default max(1, round(m / 6))
  double power_fraction = 0.1;    // P = fraction * median_i ||Phi x_i||
  CalibrationMode calibration = CalibrationMode::calibrated;
  Normalization normalization = Normalization::unit_column;
  int trials = 20;
  std::uint64_t master_seed = 1;
  std::vector<AuthorizationLevel> levels = {AuthorizationLevel::l0, AuthorizationLevel::l1,
                                            AuthorizationLevel::l2};
  bool labeled = true;         // synthetic class labels and the SVM metric
  bool sparsify_records = false;  // publish only the S largest coefficients
  double train_fraction = 0.8;
  SvmConfig svm;
  SolverConfig solver;
  unsigned threads = 1;
  const DatasetTable* table = nullptr;  // use this table instead of synthesizing one per trial

  Index m() const { return measurement_count(n, measurement_rate); }
  Index sparsity_level() const {
    return sparsity.value_or(std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(m()) / 6.0))));
  }
};

struct MetricRow {
  std::size_t epsilon_index = 0;
  double epsilon = 0.0;
  AuthorizationLevel level = AuthorizationLevel::l0;
  int trial = 0;
  std::string metric;
  double value = 0.0;
  std::uint64_t stream_id = 0;
};

struct CellFailure {
  double epsilon = 0.0;
  AuthorizationLevel level = AuthorizationLevel::l0;
  int trial = 0;
  std::string error;
};

struct SummaryCell {
  double epsilon = 0.0;
  AuthorizationLevel level = AuthorizationLevel::l0;
  std::string metric;
  MeanSe stats;
};

struct ExperimentReport {
  SweepConfig config;
  std::vector<MetricRow> rows;
  std::vector<SummaryCell> summary;
  std::vector<CellFailure> failures;

  std::optional<MeanSe> find(double epsilon, AuthorizationLevel level, const std::string& metric) const {
    for (const auto& c : summary)
      if (c.epsilon == epsilon && c.level == level && c.metric == metric) return c.stats;
    return std::nullopt;
  }
};

namespace detail {

struct TrialOutput {
  std::vector<MetricRow> rows;
  std::vector<CellFailure> failures;
};

inline double bit_error_rate(const std::vector<BitString>& sent, const RecoveredTable& got) {
  long wrong = 0, total = 0;
  for (std::size_t i = 0; i < sent.size(); ++i) {
    const auto& bits = got.diagnostics[i].bits;
    for (std::size_t k = 0; k < sent[i].size(); ++k) {
      wrong += !bits || (*bits)[k] != sent[i][k];
      ++total;
    }
  }
  return total ? static_cast<double>(wrong) / static_cast<double>(total) : 0.0;
}

inline TrialOutput run_trial(const SweepConfig& cfg, int trial) {
  TrialOutput out;
  RngStream stream = RngStream(cfg.master_seed, kSweepStream).derive(static_cast<std::uint64_t>(trial));
  const Index S = cfg.sparsity_level();

  DatasetTable synthetic;
  const DatasetTable* table = cfg.table;
  if (table == nullptr) {
    synthetic = synthesize_dataset(cfg.records, cfg.n, S, stream.derive(0), SyntheticOptions{cfg.labeled});
    table = &synthetic;
  }
  const Matrix& X = table->records;
  const bool with_svm = cfg.labeled && table->labels.has_value();

  KeyBundle keys;
  keys.ensemble = build_ensemble(X.cols(), cfg.measurement_rate, cfg.normalization,
                                 RngStream(stream.derive(1).next_u64(), kMeasurementStream));
  const MeasurementEnsemble& ens = *keys.ensemble;
  const Matrix clean_measurements = X * ens.phi.transpose();  // rows Phi x_i
  if (cfg.embedding_rate > 0.0) {
    Vector norms = clean_measurements.rowwise().norm();
    std::sort(norms.data(), norms.data() + norms.size());
    const Index N = norms.size();
    const double median = N % 2 ? norms[N / 2] : 0.5 * (norms[N / 2 - 1] + norms[N / 2]);
    const double P = cfg.power_fraction * median;
    keys.coding = build_coding_key(ens.m(), cfg.embedding_rate, P > 0.0 ? P : cfg.power_fraction,
                                   RngStream(stream.derive(2).next_u64(), kCodingStream));
  }
  std::optional<Split> split;
  if (with_svm) split = train_test_split(X.rows(), cfg.train_fraction, stream.derive(3));

  PublishConfig pcfg;
  pcfg.calibration = cfg.calibration;
  pcfg.noise_seed = stream.derive(4).next_u64();
  pcfg.message_seed = stream.derive(5).next_u64();
  if (cfg.sparsify_records) pcfg.sparsify = S;

  auto emit = [&](std::size_t e, AuthorizationLevel level, const std::string& metric, double value) {
    out.rows.push_back({e, cfg.epsilons[e], level, trial, metric, value, stream.stream_id()});
  };
  auto svm_rate = [&](const Matrix& train_domain, const Matrix& test_domain) {
    SvmConfig sc = cfg.svm;
    sc.seed = stream.derive(6).next_u64();
    const auto model = train_linear_svm(take_rows(train_domain, split->train),
                                        take(*table->labels, split->train), sc);
    return misclassification_rate(model, take_rows(test_domain, split->test),
                                  take(*table->labels, split->test));
  };

  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    pcfg.epsilon = cfg.epsilons[e];
    std::optional<PublishedTable> pub;
    try {
      pub = publish(X, ens, keys.coding ? &*keys.coding : nullptr, pcfg);
    } catch (const Error& err) {
      for (auto level : cfg.levels) out.failures.push_back({cfg.epsilons[e], level, trial, err.what()});
      continue;
    }
    for (auto level : cfg.levels) {
      try {
        ReconstructOptions ro;
        ro.level = level;
        ro.solver = cfg.solver;
        const RecoveredTable rec = reconstruct_table(pub->values, pub->provenance, keys, ro);
        if (level == AuthorizationLevel::l0) {
          if (with_svm) emit(e, level, "misclassification", svm_rate(rec.values, clean_measurements));
          continue;
        }
        emit(e, level, "l2_error", l2_error_metric(X, rec.values).mean);
        if (with_svm) emit(e, level, "misclassification", svm_rate(rec.values, X));
        if (level == AuthorizationLevel::l2 && keys.coding)
          emit(e, level, "bit_error_rate", bit_error_rate(pub->messages, rec));
        emit(e, level, "nonconverged", static_cast<double>(rec.nonconverged()));
      } catch (const Error& err) {
        out.failures.push_back({cfg.epsilons[e], level, trial, err.what()});
      }
    }
  }
  return out;
}

inline int metric_rank(const std::string& name) {
  const auto& names = metric_names();
  return static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
}

}  // namespace detail

inline ExperimentReport sweep(const SweepConfig& cfg) {
  require(!cfg.epsilons.empty(), Errc::invalid_config, "epsilon grid is empty");
  for (double e : cfg.epsilons) require(e > 0.0, Errc::invalid_config, "every epsilon must be > 0");
  require(cfg.trials >= 1, Errc::invalid_config, "trials must be >= 1");
  require(!cfg.levels.empty(), Errc::invalid_config, "level set is empty");
  if (cfg.table == nullptr) {
    require(cfg.records >= 2, Errc::invalid_config, "need at least two records");
    require(cfg.n >= 4, Errc::invalid_config, "need n >= 4");
  } else {
    require(cfg.table->size() >= 2, Errc::invalid_config, "need at least two records");
  }

  std::vector<detail::TrialOutput> per_trial(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, cfg.threads, [&](Index t) {
    per_trial[static_cast<std::size_t>(t)] = detail::run_trial(cfg, static_cast<int>(t));
  });

  ExperimentReport report;
  report.config = cfg;
  report.config.table = nullptr;
  for (auto& t : per_trial) {
    report.rows.insert(report.rows.end(), t.rows.begin(), t.rows.end());
    report.failures.insert(report.failures.end(), t.failures.begin(), t.failures.end());
  }
  auto key = [](const MetricRow& r) {
    return std::make_tuple(r.epsilon_index, static_cast<int>(r.level), r.trial, detail::metric_rank(r.metric));
  };
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [&](const MetricRow& a, const MetricRow& b) { return key(a) < key(b); });

  std::map<std::tuple<std::size_t, int, int>, std::vector<double>> groups;
  for (const auto& r : report.rows)
    groups[{r.epsilon_index, static_cast<int>(r.level), detail::metric_rank(r.metric)}].push_back(r.value);
  for (const auto& [k, values] : groups) {
    const auto& [e, level, metric] = k;
    report.summary.push_back({cfg.epsilons[e], static_cast<AuthorizationLevel>(level),
                              metric_names()[static_cast<std::size_t>(metric)], mean_and_se(values)});
  }
  return report;
}

inline std::string report_to_csv(const ExperimentReport& r) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  const std::string seed = format_hex(r.config.master_seed);
  const std::string cal = to_string(r.config.calibration);
  for (const auto& row : r.rows)
    out += format_real(row.epsilon) + "," + to_string(row.level) + "," + std::to_string(row.trial) + "," +
           row.metric + "," + format_real(row.value) + "," + seed + "," + format_hex(row.stream_id) + "," +
           cal + "\n";
  return out;
}

inline nlohmann::json report_summary_json(const ExperimentReport& r) {
  const auto& c = r.config;
  nlohmann::json j;
  j["format"] = "mldpcs-sweep-summary";
  j["version"] = 1;
  nlohmann::json cfg;
  cfg["epsilons"] = c.epsilons;
  cfg["records"] = c.records;
  cfg["n"] = c.n;
  cfg["m"] = c.m();
  cfg["sparsity"] = c.sparsity_level();
  cfg["measurement_rate"] = c.measurement_rate;
  cfg["embedding_rate"] = c.embedding_rate;
  cfg["power_fraction"] = c.power_fraction;
  cfg["calibration"] = to_string(c.calibration);
  cfg["normalization"] = to_string(c.normalization);
  cfg["trials"] = c.trials;
  cfg["master_seed"] = format_hex(c.master_seed);
  std::vector<std::string> levels;
  for (auto l : c.levels) levels.emplace_back(to_string(l));
  cfg["levels"] = levels;
  cfg["labeled"] = c.labeled;
  cfg["sparsify_records"] = c.sparsify_records;
  cfg["train_fraction"] = c.train_fraction;
  j["config"] = cfg;
  j["csv_columns"] = {"epsilon", "level", "trial", "metric", "value", "master_seed", "stream_id", "calibration"};
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& s : r.summary)
    cells.push_back({{"epsilon", s.epsilon},
                     {"level", to_string(s.level)},
                     {"metric", s.metric},
                     {"mean", s.stats.mean},
                     {"se", s.stats.se},
                     {"count", s.stats.count}});
  j["cells"] = cells;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures)
    failures.push_back({{"epsilon", f.epsilon}, {"level", to_string(f.level)}, {"trial", f.trial}, {"error", f.error}});
  j["failures"] = failures;
  return j;
}

/// Writes <prefix>.csv and <prefix>.json atomically.
inline void write_report(const ExperimentReport& r, const std::string& prefix) {
  write_file_atomic(prefix + ".csv", report_to_csv(r));
  write_file_atomic(prefix + ".json", report_summary_json(r).dump(2) + "\n");
}

}  // namespace mldpcs::harness
