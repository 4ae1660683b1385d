#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mldpcs/error.hpp"
#include "mldpcs/harness/dataset.hpp"
#include "mldpcs/numeric.hpp"

namespace mldpcs::harness {

/// Writes `contents` to `path` via a sibling temp file and rename, so readers
/// never observe a half-written file.
inline void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw Error(Errc::io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw Error(Errc::io, "cannot rename '" + tmp.string() + "': " + ec.message());
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Shortest decimal text that round-trips the double.
inline std::string format_real(double v) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// CSV with header `rec_id,<prefix>1..<prefix>k`.
inline std::string matrix_to_csv(const Eigen::Ref<const Matrix>& values, const std::string& prefix) {
  std::string out = "rec_id";
  for (Index j = 0; j < values.cols(); ++j) out += "," + prefix + std::to_string(j + 1);
  out += "\n";
  for (Index i = 0; i < values.rows(); ++i) {
    out += std::to_string(i);
    for (Index j = 0; j < values.cols(); ++j) out += "," + format_real(values(i, j));
    out += "\n";
  }
  return out;
}

/// Inverse of matrix_to_csv: a leading rec_id column is dropped.
inline Matrix matrix_from_csv(const std::string& path) {
  const RawTable raw = read_csv(path);
  const std::size_t first = !raw.header.empty() && raw.header[0] == "rec_id" ? 1 : 0;
  Matrix m(static_cast<Index>(raw.rows.size()), static_cast<Index>(raw.header.size() - first));
  for (std::size_t r = 0; r < raw.rows.size(); ++r)
    for (std::size_t c = first; c < raw.header.size(); ++c)
      m(static_cast<Index>(r), static_cast<Index>(c - first)) =
          detail::parse_number(raw.rows[r][c], r, raw.header[c]);
  return m;
}

}  // namespace mldpcs::harness
