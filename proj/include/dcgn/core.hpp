#pragma once

#include "dcgn/types.hpp"

#include <algorithm>
#include <cmath>

namespace dcgn {

inline constexpr double kDefaultGammaFloor = 1e-8;
inline constexpr double kDefaultVarianceFloor = 1e-6;

/// Row i of the result is the channel vector of pixel i in row-major scan order.
PixelBatch flatten_image(const ImageTensor& img);

/// Inverse of flatten_image.
ImageTensor unflatten_batch(const PixelBatch& batch, int width, int height);

/// Per-channel mean and population variance of an N x D sample matrix.
template <typename Derived>
BatchStats compute_batch_stats(const Eigen::MatrixBase<Derived>& samples,
                               double variance_floor = kDefaultVarianceFloor) {
  const auto n = static_cast<double>(samples.rows());
  BatchStats stats;
  stats.mean = samples.colwise().sum().transpose() / n;
  stats.variance = (samples.rowwise() - stats.mean.transpose())
                       .colwise()
                       .squaredNorm()
                       .transpose() /
                   n;
  stats.variance = stats.variance.cwiseMax(variance_floor);
  return stats;
}

inline BatchStats compute_batch_stats(const PixelBatch& batch,
                                      double variance_floor = kDefaultVarianceFloor) {
  return compute_batch_stats(batch.samples(), variance_floor);
}

/// Row-wise softmax with max subtraction, then every entry raised to at least
/// gamma_floor and the row renormalised.
template <typename Derived>
PosteriorField softmax_rows(const Eigen::MatrixBase<Derived>& logits,
                            double gamma_floor = kDefaultGammaFloor) {
  Matrix gamma = logits;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    auto row = gamma.row(i);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
    row = row.cwiseMax(gamma_floor);
    row /= row.sum();
  }
  return PosteriorField{std::move(gamma)};
}

/// Index of the largest entry in each row; ties go to the lowest index.
template <typename Derived>
std::vector<int> argmax_rows(const Eigen::MatrixBase<Derived>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

/// Population standard deviation (1/n).
double population_std(std::span<const double> values);
double mean_of(std::span<const double> values);

}  // namespace dcgn
