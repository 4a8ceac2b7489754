#pragma once

#include "dcgn/mixture.hpp"

namespace dcgn {

inline constexpr double kKmeansTolerance = 1e-6;

struct KmeansResult {
  Matrix centroids;         // K x D
  std::vector<int> labels;  // nearest centroid per sample
  double inertia = 0.0;     // sum of squared distances to the assigned centroid
  int epochs = 0;
};

/// Seeded k-means++ initialisation from batch rows.
Matrix kmeans_plus_plus(const PixelBatch& batch, int k, std::mt19937_64& rng);

/// Nearest centroid by squared Euclidean distance, ties to the lowest index.
std::vector<int> nearest_centroid(const PixelBatch& batch, const Matrix& centroids);

double kmeans_inertia(const PixelBatch& batch, const Matrix& centroids,
                      std::span<const int> labels);

/// Minibatch k-means. Each epoch visits a seeded shuffle of the rows in
/// chunks of config.batch_size; every centroid moves toward its assigned
/// samples with step 1/count, counts restarting each epoch. Stops once the
/// largest centroid movement over an epoch drops below kKmeansTolerance or
/// after config.epochs epochs. With batch_size >= N an epoch is one Lloyd step.
KmeansResult minibatch_kmeans(const PixelBatch& batch, int k, const RunConfig& config);

/// fit_constrained_em with lambda forced to zero.
EmResult fit_gmm(const PixelBatch& batch, int k, const RunConfig& config);

}  // namespace dcgn
