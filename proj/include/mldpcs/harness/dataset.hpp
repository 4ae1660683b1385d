#pragma once

// Tabular datasets: CSV ingestion, encoding to [0, 1] and the synthetic
// sparse-record generator used for desk-scale experiments.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mldpcs/error.hpp"
#include "mldpcs/numeric.hpp"
#include "mldpcs/rng.hpp"

namespace mldpcs::harness {

enum class ColumnKind { binary, categorical, continuous, encoded, label };

inline const char* to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::binary: return "binary";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::encoded: return "encoded";
    case ColumnKind::label: return "label";
  }
  return "?";
}

inline ColumnKind parse_column_kind(const std::string& text) {
  if (text == "binary") return ColumnKind::binary;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "continuous") return ColumnKind::continuous;
  if (text == "encoded") return ColumnKind::encoded;
  if (text == "label") return ColumnKind::label;
  throw Error(Errc::parse, "unknown column kind '" + text + "'");
}

/// Raw CSV contents: header plus string cells.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw Error(Errc::parse, "unterminated quote on line " + std::to_string(line_no));
  out.push_back(cell);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

inline bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "NaN" || cell == "nan";
}

inline double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || !std::isfinite(v))
    throw Error(Errc::parse, "row " + std::to_string(row) + ", column '" + column +
                                 "': not a number: '" + cell + "'");
  return v;
}

}  // namespace detail

inline RawTable parse_csv(std::istream& in) {
  RawTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = detail::split_csv_line(line, line_no);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(Errc::parse, "line " + std::to_string(line_no) + " has " +
                                   std::to_string(cells.size()) + " fields, header has " +
                                   std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw Error(Errc::parse, "CSV has no header");
  return t;
}

inline RawTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  return parse_csv(in);
}

/// Column name -> kind. Unlisted columns default to `encoded` (numeric values
/// already in [0, 1], passed through), except a column named "label".
using SchemaHints = std::map<std::string, ColumnKind>;

/// Parses "age:continuous,sex:binary,..." into hints.
inline SchemaHints parse_schema_hints(const std::string& text) {
  SchemaHints hints;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0)
      throw Error(Errc::parse, "schema hint '" + item + "' is not name:kind");
    hints[item.substr(0, colon)] = parse_column_kind(item.substr(colon + 1));
  }
  return hints;
}

/// One encoded output column.
struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::encoded;
  std::string source;  // originating raw column
};

struct DatasetTable {
  Matrix records;  // N x n, values in [0, 1]
  std::vector<ColumnMeta> columns;
  std::optional<std::vector<int>> labels;  // {0, 1}
  std::string label_name;
  std::vector<std::string> warnings;

  Index size() const { return records.rows(); }
  Index width() const { return records.cols(); }
};

/// Fitted encoding of a raw table: one-hot categoricals, min-max continuous,
/// {0, 1} binaries, pass-through pre-encoded columns, and an optional label.
class TableEncoder {
 public:
  struct Source {
    std::string name;
    ColumnKind kind = ColumnKind::encoded;
    std::vector<std::string> levels;  // categorical and binary, sorted
    double lo = 0.0, hi = 0.0;        // continuous
  };

  static TableEncoder fit(const RawTable& raw, const SchemaHints& hints = {}) {
    TableEncoder enc;
    for (const auto& [name, kind] : hints) {
      if (std::find(raw.header.begin(), raw.header.end(), name) == raw.header.end())
        throw Error(Errc::invalid_config, "schema hint names unknown column '" + name + "'");
      (void)kind;
    }
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
      Source src;
      src.name = raw.header[c];
      if (auto it = hints.find(src.name); it != hints.end())
        src.kind = it->second;
      else
        src.kind = src.name == "label" ? ColumnKind::label : ColumnKind::encoded;
      check_complete(raw, c);
      switch (src.kind) {
        case ColumnKind::categorical:
        case ColumnKind::binary:
        case ColumnKind::label: {
          std::vector<std::string> levels;
          for (const auto& row : raw.rows) levels.push_back(row[c]);
          std::sort(levels.begin(), levels.end(), level_less);
          levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
          // 0/1 columns keep their numeric meaning even if one value is absent.
          if (src.kind != ColumnKind::categorical &&
              std::all_of(levels.begin(), levels.end(),
                          [](const std::string& v) { return v == "0" || v == "1"; }))
            levels = {"0", "1"};
          if (src.kind != ColumnKind::categorical && levels.size() > 2)
            throw Error(Errc::invalid_config, "column '" + src.name + "' is " +
                                                  to_string(src.kind) + " but has " +
                                                  std::to_string(levels.size()) + " distinct values");
          src.levels = std::move(levels);
          break;
        }
        case ColumnKind::continuous: {
          src.lo = std::numeric_limits<double>::infinity();
          src.hi = -src.lo;
          for (std::size_t r = 0; r < raw.rows.size(); ++r) {
            const double v = detail::parse_number(raw.rows[r][c], r, src.name);
            src.lo = std::min(src.lo, v);
            src.hi = std::max(src.hi, v);
          }
          break;
        }
        case ColumnKind::encoded:
          break;
      }
      if (src.kind == ColumnKind::label) {
        if (enc.label_index_) throw Error(Errc::invalid_config, "more than one label column");
        enc.label_index_ = enc.sources_.size();
      }
      enc.sources_.push_back(std::move(src));
    }
    return enc;
  }

  const std::vector<Source>& sources() const { return sources_; }

  std::vector<ColumnMeta> output_columns() const {
    std::vector<ColumnMeta> cols;
    for (const auto& s : sources_) {
      switch (s.kind) {
        case ColumnKind::categorical:
          for (const auto& level : s.levels) cols.push_back({s.name + "=" + level, s.kind, s.name});
          break;
        case ColumnKind::label:
          break;
        default:
          cols.push_back({s.name, s.kind, s.name});
      }
    }
    return cols;
  }

  /// Encodes `raw` (which must have the fitted header). Missing values are
  /// rejected with their data-row index; unseen categories become an all-zero
  /// block and add a warning.
  DatasetTable transform(const RawTable& raw) const {
    require(raw.header.size() == sources_.size(), Errc::dimension_mismatch,
            "table has " + std::to_string(raw.header.size()) + " columns, encoder expects " +
                std::to_string(sources_.size()));
    for (std::size_t c = 0; c < sources_.size(); ++c)
      require(raw.header[c] == sources_[c].name, Errc::dimension_mismatch,
              "column " + std::to_string(c) + " is '" + raw.header[c] + "', expected '" +
                  sources_[c].name + "'");
    DatasetTable t;
    t.columns = output_columns();
    const auto N = static_cast<Index>(raw.rows.size());
    t.records = Matrix::Zero(N, static_cast<Index>(t.columns.size()));
    if (label_index_) {
      t.labels.emplace(raw.rows.size(), 0);
      t.label_name = sources_[*label_index_].name;
    }
    for (std::size_t c = 0; c < sources_.size(); ++c) check_complete(raw, c);

    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
      const auto& row = raw.rows[r];
      const auto ri = static_cast<Index>(r);
      Index out = 0;
      for (std::size_t c = 0; c < sources_.size(); ++c) {
        const auto& s = sources_[c];
        const std::string& cell = row[c];
        switch (s.kind) {
          case ColumnKind::categorical: {
            const auto it = std::find(s.levels.begin(), s.levels.end(), cell);
            if (it == s.levels.end())
              t.warnings.push_back("row " + std::to_string(r) + ": unknown category '" + cell +
                                   "' in column '" + s.name + "' encoded as all zeros");
            else
              t.records(ri, out + static_cast<Index>(it - s.levels.begin())) = 1.0;
            out += static_cast<Index>(s.levels.size());
            break;
          }
          case ColumnKind::binary:
          case ColumnKind::label: {
            const auto it = std::find(s.levels.begin(), s.levels.end(), cell);
            if (it == s.levels.end())
              throw Error(Errc::parse, "row " + std::to_string(r) + ", column '" + s.name +
                                           "': value '" + cell + "' was not seen when fitting");
            const int bit = static_cast<int>(it - s.levels.begin());
            if (s.kind == ColumnKind::label) {
              (*t.labels)[r] = bit;
            } else {
              t.records(ri, out++) = bit;
            }
            break;
          }
          case ColumnKind::continuous: {
            const double v = detail::parse_number(cell, r, s.name);
            const double span = s.hi - s.lo;
            t.records(ri, out++) = span > 0.0 ? std::clamp((v - s.lo) / span, 0.0, 1.0) : 0.0;
            break;
          }
          case ColumnKind::encoded: {
            const double v = detail::parse_number(cell, r, s.name);
            if (v < 0.0 || v > 1.0)
              throw Error(Errc::parse, "row " + std::to_string(r) + ", column '" + s.name +
                                           "': pre-encoded value " + cell + " outside [0, 1]");
            t.records(ri, out++) = v;
            break;
          }
        }
      }
    }
    return t;
  }

  /// Recovers the categorical value of every one-hot block (argmax; an
  /// all-zero block decodes to the empty string).
  std::vector<std::vector<std::string>> decode_categorical(const Matrix& records) const {
    std::vector<std::vector<std::string>> out(static_cast<std::size_t>(records.rows()));
    Index offset = 0;
    for (const auto& s : sources_) {
      if (s.kind == ColumnKind::label) continue;
      if (s.kind != ColumnKind::categorical) {
        ++offset;
        continue;
      }
      const auto k = static_cast<Index>(s.levels.size());
      for (Index r = 0; r < records.rows(); ++r) {
        Index best = 0;
        const double top = records.row(r).segment(offset, k).maxCoeff(&best);
        out[static_cast<std::size_t>(r)].push_back(
            top > 0.0 ? s.levels[static_cast<std::size_t>(best)] : std::string());
      }
      offset += k;
    }
    return out;
  }

 private:
  static void check_complete(const RawTable& raw, std::size_t c) {
    for (std::size_t r = 0; r < raw.rows.size(); ++r)
      if (detail::is_missing(raw.rows[r][c]))
        throw Error(Errc::parse, "missing value at row " + std::to_string(r) + ", column '" +
                                     raw.header[c] + "'");
  }

  // Numeric-looking levels sort numerically so "0" < "1" < "10".
  static bool level_less(const std::string& a, const std::string& b) {
    char* ea = nullptr;
    char* eb = nullptr;
    const double va = std::strtod(a.c_str(), &ea);
    const double vb = std::strtod(b.c_str(), &eb);
    const bool na = !a.empty() && *ea == '\0';
    const bool nb = !b.empty() && *eb == '\0';
    if (na && nb && va != vb) return va < vb;
    if (na != nb) return na;
    return a < b;
  }

  std::vector<Source> sources_;
  std::optional<std::size_t> label_index_;
};

/// Parses and encodes a CSV in one step (fit and transform on the same rows).
inline DatasetTable ingest_csv(const std::string& path, const SchemaHints& hints = {}) {
  const RawTable raw = read_csv(path);
  return TableEncoder::fit(raw, hints).transform(raw);
}

/// Pads with zero columns up to `n` (never truncates).
inline void pad_to_width(DatasetTable& t, Index n) {
  require(n >= t.width(), Errc::invalid_config,
          "table is " + std::to_string(t.width()) + " wide, cannot pad to " + std::to_string(n));
  const Index old = t.width();
  t.records.conservativeResize(Eigen::NoChange, n);
  t.records.rightCols(n - old).setZero();
  for (Index j = old; j < n; ++j) t.columns.push_back({"pad_" + std::to_string(j), ColumnKind::encoded, ""});
}

/// Writes the encoded records (and label, if any) as CSV.
inline void write_table_csv(std::ostream& out, const DatasetTable& t) {
  for (Index j = 0; j < t.width(); ++j) out << (j ? "," : "") << t.columns[static_cast<std::size_t>(j)].name;
  if (t.labels) out << "," << (t.label_name.empty() ? "label" : t.label_name);
  out << "\n";
  char buf[32];
  for (Index i = 0; i < t.size(); ++i) {
    for (Index j = 0; j < t.width(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", t.records(i, j));
      out << (j ? "," : "") << buf;
    }
    if (t.labels) out << "," << (*t.labels)[static_cast<std::size_t>(i)];
    out << "\n";
  }
}

struct SyntheticOptions {
  bool labeled = false;
};

/// N records x = Psi s with S-sparse +-1 spikes in the DCT basis, then one
/// global affine map of the whole table onto [0, 1]. Labeled mode reserves
/// DCT frequency 1 (the slowest non-constant cosine) for the class: its spike
/// is +1 for label 1 and -1 for label 0, and the remaining S - 1 spikes sit
/// uniformly on frequencies >= 2.
inline DatasetTable synthesize_dataset(Index N, Index n, Index S, RngStream rng,
                                       SyntheticOptions options = {},
                                       Matrix* coefficients = nullptr) {
  require(N >= 1 && n >= 2, Errc::invalid_dimension, "synthesize_dataset needs N >= 1, n >= 2");
  require(S >= 1 && S <= n, Errc::invalid_config, "sparsity S must lie in [1, n]");
  if (options.labeled) require(S <= n - 1, Errc::invalid_config, "labeled mode needs S <= n - 1");
  const Matrix psi = dct_basis(n);
  Matrix coeffs = Matrix::Zero(N, n);
  DatasetTable t;
  if (options.labeled) {
    t.labels.emplace(static_cast<std::size_t>(N), 0);
    t.label_name = "label";
  }
  std::vector<Index> pool;
  for (Index i = 0; i < N; ++i) {
    const Index first = options.labeled ? 2 : 0;
    const Index free_spikes = options.labeled ? S - 1 : S;
    if (options.labeled) {
      const int label = static_cast<int>(rng.next_u64() >> 63);
      (*t.labels)[static_cast<std::size_t>(i)] = label;
      coeffs(i, 1) = label ? 1.0 : -1.0;
    }
    // Partial Fisher-Yates over the eligible frequencies.
    pool.clear();
    for (Index k = first; k < n; ++k) pool.push_back(k);
    for (Index k = 0; k < free_spikes; ++k) {
      const auto span = static_cast<std::uint64_t>(pool.size()) - static_cast<std::uint64_t>(k);
      const auto j = static_cast<std::size_t>(k) + static_cast<std::size_t>(rng.below(span));
      std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
      coeffs(i, pool[static_cast<std::size_t>(k)]) = (rng.next_u64() >> 63) ? 1.0 : -1.0;
    }
  }
  Matrix x = coeffs * psi.transpose();
  const double lo = x.minCoeff(), hi = x.maxCoeff();
  if (hi > lo) x = (x.array() - lo) / (hi - lo);
  else x.setZero();
  t.records = std::move(x);
  for (Index j = 0; j < n; ++j) t.columns.push_back({"x_" + std::to_string(j + 1), ColumnKind::encoded, ""});
  if (coefficients != nullptr) *coefficients = std::move(coeffs);
  return t;
}

}  // namespace mldpcs::harness
