#include "dcgn/baselines.hpp"

#include <limits>
#include <numeric>

namespace dcgn {

Matrix kmeans_plus_plus(const PixelBatch& batch, int k, std::mt19937_64& rng) {
  const Matrix& x = batch.samples();
  const auto n = x.rows();
  if (k < 1) throw InvalidInput("k must be positive");
  if (n < k) throw InvalidInput("k-means needs at least K samples");

  Matrix centroids(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = x.row(first(rng));
  Vector closest = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += closest(i);
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = x.row(pick);
    closest = closest.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

std::vector<int> nearest_centroid(const PixelBatch& batch, const Matrix& centroids) {
  const Matrix& x = batch.samples();
  std::vector<int> labels(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double dist = (x.row(i) - centroids.row(c)).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
  }
  return labels;
}

double kmeans_inertia(const PixelBatch& batch, const Matrix& centroids,
                      std::span<const int> labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch.n_samples(); ++i) {
    total += (batch.samples().row(i) - centroids.row(labels[static_cast<std::size_t>(i)]))
                 .squaredNorm();
  }
  return total;
}

KmeansResult minibatch_kmeans(const PixelBatch& batch, int k, const RunConfig& config) {
  if (config.epochs < 1 || config.batch_size < 1) {
    throw InvalidInput("k-means needs positive epochs and batch size");
  }
  std::mt19937_64 rng(config.seed);
  KmeansResult result;
  result.centroids = kmeans_plus_plus(batch, k, rng);

  const Matrix& x = batch.samples();
  const auto n = x.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const bool full_batch = config.batch_size >= n;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const Matrix before = result.centroids;
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    if (!full_batch) std::shuffle(order.begin(), order.end(), rng);

    for (Eigen::Index begin = 0; begin < n; begin += config.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, n - begin);
      Matrix rows(size, x.cols());
      for (Eigen::Index r = 0; r < size; ++r) {
        rows.row(r) = x.row(order[static_cast<std::size_t>(begin + r)]);
      }
      const PixelBatch chunk(std::move(rows));
      const std::vector<int> assigned = nearest_centroid(chunk, result.centroids);
      for (Eigen::Index r = 0; r < size; ++r) {
        const auto c = static_cast<std::size_t>(assigned[static_cast<std::size_t>(r)]);
        counts[c] += 1.0;
        const double eta = 1.0 / counts[c];
        auto centroid = result.centroids.row(static_cast<Eigen::Index>(c));
        centroid = (1.0 - eta) * centroid + eta * chunk.samples().row(r);
      }
    }

    result.epochs = epoch;
    const double movement = (result.centroids - before).rowwise().norm().maxCoeff();
    if (movement < kKmeansTolerance) break;
  }
  result.labels = nearest_centroid(batch, result.centroids);
  result.inertia = kmeans_inertia(batch, result.centroids, result.labels);
  return result;
}

EmResult fit_gmm(const PixelBatch& batch, int k, const RunConfig& config) {
  RunConfig plain = config;
  plain.k = k;
  plain.lambda = 0.0;
  return fit_constrained_em(batch, plain);
}

}  // namespace dcgn
