#include "dcgn/baselines.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace dcgn {
namespace {

/// Plain Lloyd iterations: assign to the nearest centroid (lowest index on
/// ties), move each non-empty centroid to the mean of its points.
double lloyd_final_inertia(const Matrix& x, Matrix centroids) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centroids.rows();
  std::vector<int> label(static_cast<std::size_t>(n));
  auto assign = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      for (Eigen::Index c = 1; c < k; ++c) {
        if ((x.row(i) - centroids.row(c)).squaredNorm() < (x.row(i) - centroids.row(best)).squaredNorm()) {
          best = static_cast<int>(c);
        }
      }
      label[static_cast<std::size_t>(i)] = best;
    }
  };
  for (int it = 0; it < 1000; ++it) {
    assign();
    Matrix next = centroids;
    for (Eigen::Index c = 0; c < k; ++c) {
      RowVector sum = RowVector::Zero(x.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (label[static_cast<std::size_t>(i)] == c) {
          sum += x.row(i);
          ++count;
        }
      }
      if (count > 0) next.row(c) = sum / count;
    }
    const double moved = (next - centroids).rowwise().norm().maxCoeff();
    centroids = next;
    if (moved < 1e-9) break;
  }
  assign();
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    inertia += (x.row(i) - centroids.row(label[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return inertia;
}

Matrix two_clusters(std::mt19937_64& rng, Eigen::Index n, double sd) {
  std::normal_distribution<double> noise(0.0, sd);
  Matrix x(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double centre = i % 2 == 0 ? 0.3 : 0.7;
    for (int c = 0; c < 3; ++c) x(i, c) = centre + noise(rng);
  }
  return x;
}

TEST(KmeansTest, SingleClusterIsBatchMean) {
  std::mt19937_64 rng(1);
  const PixelBatch b(testing::random_unit_matrix(rng, 97, 3));
  const RowVector mean = b.samples().colwise().mean();
  for (int batch_size : {10, 97, 1000}) {
    RunConfig cfg;
    cfg.batch_size = batch_size;
    const KmeansResult r = minibatch_kmeans(b, 1, cfg);
    EXPECT_LT((r.centroids.row(0) - mean).cwiseAbs().maxCoeff(), 1e-12) << batch_size;
  }
}

TEST(KmeansTest, SeparatedClustersRecovered) {
  std::mt19937_64 rng(2);
  const PixelBatch b(two_clusters(rng, 2000, 0.02));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = 128;
    const KmeansResult r = minibatch_kmeans(b, 2, cfg);
    const int low = r.centroids(0, 0) < r.centroids(1, 0) ? 0 : 1;
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(r.centroids(low, c), 0.3, 0.02);
      EXPECT_NEAR(r.centroids(1 - low, c), 0.7, 0.02);
    }
  }
}

TEST(KmeansTest, FullBatchMatchesLloydOracle) {
  std::mt19937_64 gen(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PixelBatch b = testing::random_clustered_batch(gen, 100, 3, 4);
    RunConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = 100;
    cfg.epochs = 1000;
    std::mt19937_64 init_rng(seed);
    const Matrix init = kmeans_plus_plus(b, 3, init_rng);
    const KmeansResult r = minibatch_kmeans(b, 3, cfg);
    EXPECT_NEAR(r.inertia, lloyd_final_inertia(b.samples(), init), 1e-6) << "seed " << seed;
  }
}

TEST(KmeansTest, FullBatchInertiaNeverIncreases) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    const PixelBatch b = testing::random_clustered_batch(gen, 150, 3, 5);
    RunConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.batch_size = 150;
    double previous = std::numeric_limits<double>::infinity();
    for (int epochs = 1; epochs <= 15; ++epochs) {
      cfg.epochs = epochs;
      const double inertia = minibatch_kmeans(b, 4, cfg).inertia;
      EXPECT_LE(inertia, previous + 1e-12);
      previous = inertia;
    }
  }
}

TEST(KmeansTest, DeterministicUnderEqualSeeds) {
  std::mt19937_64 gen(5);
  const PixelBatch b = testing::random_clustered_batch(gen, 300, 3, 3);
  RunConfig cfg;
  cfg.batch_size = 32;
  cfg.seed = 77;
  const KmeansResult a = minibatch_kmeans(b, 3, cfg);
  const KmeansResult c = minibatch_kmeans(b, 3, cfg);
  EXPECT_EQ(a.centroids, c.centroids);
  EXPECT_EQ(a.labels, c.labels);
}

TEST(KmeansTest, PlusPlusPicksDistinctBatchRows) {
  std::mt19937_64 gen(6);
  const PixelBatch b(testing::random_unit_matrix(gen, 40, 3));
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix c = kmeans_plus_plus(b, 5, rng);
    for (Eigen::Index i = 0; i < 5; ++i) {
      bool found = false;
      for (Eigen::Index r = 0; r < 40; ++r) found = found || b.samples().row(r) == c.row(i);
      EXPECT_TRUE(found);
      for (Eigen::Index j = 0; j < i; ++j) EXPECT_NE(c.row(i), c.row(j));
    }
  }
}

TEST(KmeansTest, NearestCentroidTiesGoLow) {
  Matrix x(1, 1);
  x << 0.5;
  Matrix c(3, 1);
  c << 0.7, 0.3, 0.3;
  EXPECT_EQ(nearest_centroid(PixelBatch(x), c), (std::vector<int>{0}));
}

TEST(KmeansTest, TooFewSamples) {
  const PixelBatch b(Matrix::Zero(2, 3));
  EXPECT_THROW(minibatch_kmeans(b, 3, RunConfig{}), InvalidInput);
}

TEST(GmmTest, IdenticalToConstrainedEmWithoutPenalty) {
  std::mt19937_64 gen(7);
  const PixelBatch b = testing::random_clustered_batch(gen, 250, 3, 3);
  RunConfig cfg;
  cfg.seed = 5;
  cfg.lambda = 0.3;  // ignored by fit_gmm
  const EmResult g = fit_gmm(b, 3, cfg);
  cfg.lambda = 0.0;
  const EmResult e = fit_constrained_em(b, cfg);
  EXPECT_EQ(g.trace, e.trace);
  EXPECT_EQ(g.params.means, e.params.means);
  EXPECT_EQ(g.params.covariances, e.params.covariances);
  EXPECT_EQ(g.posterior.gamma, e.posterior.gamma);
}

TEST(GmmTest, RecoversSeparatedClusters) {
  std::mt19937_64 gen(8);
  const PixelBatch b(two_clusters(gen, 1000, 0.02));
  RunConfig cfg;
  cfg.epochs = 1000;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const EmResult r = fit_gmm(b, 2, cfg);
    const int low = r.params.means(0, 0) < r.params.means(1, 0) ? 0 : 1;
    EXPECT_NEAR(r.params.means(low, 0), 0.3, 0.01);
    EXPECT_NEAR(r.params.means(1 - low, 0), 0.7, 0.01);
  }
}

TEST(GmmTest, LikelihoodNonDecreasing) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 5; ++trial) {
    const PixelBatch b = testing::random_clustered_batch(gen, 200, 3, 2);
    RunConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.k = 2;
    cfg.covariance_floor = 1e-300;
    // The stored trace pairs each M-step with the responsibilities that
    // produced it, which is also non-decreasing under plain EM.
    const EmResult r = fit_gmm(b, 2, cfg);
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i], r.trace[i - 1] - 1e-8);
  }
}

}  // namespace
}  // namespace dcgn
