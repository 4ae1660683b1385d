#pragma once

// Linear soft-margin SVM used as a utility probe:
//
//   min_w,b  lambda/2 ||w||^2 + 1/N sum_i max(0, 1 - y_i (w.x_i + b))
//
// trained by stochastic subgradient descent on standardized features with a
// 1/sqrt(t) step, an unregularized bias and iterate averaging over the second
// half of training. Deterministic given the seed.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mldpcs/error.hpp"
#include "mldpcs/numeric.hpp"
#include "mldpcs/rng.hpp"

namespace mldpcs::harness {

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 30;
  double step0 = 0.5;
  std::uint64_t seed = 0;
};

struct LinearSvm {
  Vector weights;  // in standardized coordinates
  double bias = 0.0;
  Vector mean;
  Vector scale;  // 1 / std, 0 for constant features

  double score(const Eigen::Ref<const Vector>& x) const {
    return weights.dot((x - mean).cwiseProduct(scale)) + bias;
  }
  int predict(const Eigen::Ref<const Vector>& x) const { return score(x) >= 0.0 ? 1 : 0; }
};

namespace detail {

inline void check_labels(const Eigen::Ref<const Matrix>& features, const std::vector<int>& labels) {
  require(static_cast<Index>(labels.size()) == features.rows(), Errc::dimension_mismatch,
          "one label per feature row required");
  for (int l : labels) require(l == 0 || l == 1, Errc::invalid_config, "labels must be 0 or 1");
}

}  // namespace detail

/// Features are rows; labels are {0, 1}. Both classes must be present.
inline LinearSvm train_linear_svm(const Eigen::Ref<const Matrix>& features,
                                  const std::vector<int>& labels, const SvmConfig& config = {}) {
  detail::check_labels(features, labels);
  require(features.rows() >= 2 && features.cols() >= 1, Errc::invalid_dimension,
          "SVM needs at least two rows and one feature");
  require(config.lambda > 0.0 && config.epochs >= 1 && config.step0 > 0.0, Errc::invalid_config,
          "SVM needs lambda > 0, epochs >= 1, step0 > 0");
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  require(positives > 0 && positives < static_cast<long>(labels.size()), Errc::degenerate_labels,
          "training labels contain a single class");

  const Index N = features.rows(), d = features.cols();
  LinearSvm model;
  model.mean = features.colwise().mean().transpose();
  model.scale = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    const double sd = std::sqrt((features.col(j).array() - model.mean[j]).square().sum() /
                                static_cast<double>(N));
    if (sd > 1e-12 * std::max(1.0, std::abs(model.mean[j]))) model.scale[j] = 1.0 / sd;
  }
  const Matrix Z = (features.rowwise() - model.mean.transpose()).array().rowwise() *
                   model.scale.transpose().array();

  Vector w = Vector::Zero(d), w_avg = Vector::Zero(d);
  double b = 0.0, b_avg = 0.0;
  long averaged = 0;
  std::vector<Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), Index{0});
  RngStream rng(config.seed, 0x5f3);
  long t = 0;
  const long total = static_cast<long>(config.epochs) * N;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (Index i = N - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    for (Index i : order) {
      ++t;
      const double eta = config.step0 / std::sqrt(static_cast<double>(t));
      const double y = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
      const double margin = y * (Z.row(i).dot(w) + b);
      w *= (1.0 - eta * config.lambda);
      if (margin < 1.0) {
        w += eta * y * Z.row(i).transpose();
        b += eta * y;
      }
      if (2 * t > total) {
        ++averaged;
        w_avg += (w - w_avg) / static_cast<double>(averaged);
        b_avg += (b - b_avg) / static_cast<double>(averaged);
      }
    }
  }
  model.weights = averaged > 0 ? w_avg : w;
  model.bias = averaged > 0 ? b_avg : b;
  return model;
}

inline double misclassification_rate(const LinearSvm& model, const Eigen::Ref<const Matrix>& features,
                                     const std::vector<int>& labels) {
  detail::check_labels(features, labels);
  require(features.rows() >= 1, Errc::invalid_dimension, "empty evaluation set");
  require(features.cols() == model.weights.size(), Errc::dimension_mismatch,
          "feature width does not match the model");
  long wrong = 0;
  for (Index i = 0; i < features.rows(); ++i)
    wrong += model.predict(features.row(i).transpose()) != labels[static_cast<std::size_t>(i)];
  return static_cast<double>(wrong) / static_cast<double>(features.rows());
}

/// Seeded permutation split: the first round(fraction * N) indices train.
struct Split {
  std::vector<Index> train;
  std::vector<Index> test;
};

inline Split train_test_split(Index N, double train_fraction, RngStream rng) {
  require(N >= 2 && train_fraction > 0.0 && train_fraction < 1.0, Errc::invalid_config,
          "split needs N >= 2 and a fraction in (0, 1)");
  std::vector<Index> perm(static_cast<std::size_t>(N));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = N - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
  const auto n_train = std::clamp<Index>(
      static_cast<Index>(std::llround(train_fraction * static_cast<double>(N))), 1, N - 1);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.test.assign(perm.begin() + n_train, perm.end());
  return s;
}

inline Matrix take_rows(const Eigen::Ref<const Matrix>& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

inline std::vector<int> take(const std::vector<int>& v, const std::vector<Index>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace mldpcs::harness
