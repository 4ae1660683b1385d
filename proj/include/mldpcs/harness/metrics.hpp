#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mldpcs/error.hpp"
#include "mldpcs/numeric.hpp"

namespace mldpcs::harness {

struct L2Error {
  double mean = 0.0;
  Vector per_record;
};

/// Row-wise Euclidean distance between two equally shaped tables.
inline L2Error l2_error_metric(const Eigen::Ref<const Matrix>& original,
                               const Eigen::Ref<const Matrix>& recovered) {
  require(original.rows() == recovered.rows() && original.cols() == recovered.cols(),
          Errc::dimension_mismatch,
          "l2_error_metric: tables are " + std::to_string(original.rows()) + "x" +
              std::to_string(original.cols()) + " and " + std::to_string(recovered.rows()) + "x" +
              std::to_string(recovered.cols()));
  L2Error out;
  out.per_record = (original - recovered).rowwise().norm();
  out.mean = original.rows() > 0 ? out.per_record.mean() : 0.0;
  return out;
}

/// Sample mean and standard error of the mean (0 for fewer than 2 values).
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

inline MeanSe mean_and_se(const std::vector<double>& values) {
  MeanSe out;
  out.count = values.size();
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  return out;
}

}  // namespace mldpcs::harness
