#pragma once

// Random generators and slow reference implementations shared by the unit
// tests and the acceptance runner. Nothing here calls into the library code
// it is used to check.

#include "dcgn/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <vector>

namespace dcgn::testing {

inline Matrix random_unit_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
  }
  return m;
}

/// Samples from a few Gaussian blobs inside the unit cube. Values falling
/// outside [0,1] are redrawn rather than clamped, so no two samples coincide.
inline PixelBatch random_clustered_batch(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d,
                                         int clusters) {
  std::uniform_real_distribution<double> centre(0.15, 0.85);
  std::uniform_real_distribution<double> spread(0.03, 0.12);
  std::uniform_int_distribution<int> pick(0, clusters - 1);
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix centres(clusters, d);
  Vector sds(clusters);
  for (int c = 0; c < clusters; ++c) {
    for (Eigen::Index j = 0; j < d; ++j) centres(c, j) = centre(rng);
    sds(c) = spread(rng);
  }
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = pick(rng);
    for (Eigen::Index j = 0; j < d; ++j) {
      double v = -1.0;
      while (v < 0.0 || v > 1.0) v = centres(c, j) + sds(c) * unit(rng);
      x(i, j) = v;
    }
  }
  return PixelBatch(std::move(x));
}

/// Random row-stochastic matrix with entries bounded away from zero.
inline PosteriorField random_posterior(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix g(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = u(rng);
    g.row(i) /= g.row(i).sum();
  }
  return PosteriorField{std::move(g)};
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index d, double scale) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix a(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) a(r, c) = unit(rng);
  }
  Matrix s = scale * (a * a.transpose()) / static_cast<double>(d);
  s.diagonal().array() += scale * 0.2;
  return 0.5 * (s + s.transpose());
}

inline MixtureParams random_mixture(std::mt19937_64& rng, int k, Eigen::Index d) {
  MixtureParams p;
  std::uniform_real_distribution<double> w(0.2, 1.0);
  p.weights.resize(k);
  for (int c = 0; c < k; ++c) p.weights(c) = w(rng);
  p.weights /= p.weights.sum();
  p.means = random_unit_matrix(rng, k, d);
  for (int c = 0; c < k; ++c) p.covariances.push_back(random_spd(rng, d, 0.05));
  return p;
}

/// Density of N(x; mu, sigma) from the explicit inverse and determinant.
inline double naive_gaussian_density(const RowVector& x, const RowVector& mu, const Matrix& sigma) {
  const double d = static_cast<double>(x.size());
  const RowVector diff = x - mu;
  const double maha = (diff * sigma.inverse() * diff.transpose())(0, 0);
  return std::exp(-0.5 * maha) / std::sqrt(std::pow(2.0 * std::numbers::pi, d) * sigma.determinant());
}

/// Bayes responsibilities from plain densities with the same floor and
/// renormalisation as the library.
inline Matrix naive_posterior(const Matrix& x, const MixtureParams& p, double floor) {
  Matrix g(x.rows(), p.k());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    // Work relative to the largest log term so tiny densities do not underflow.
    std::vector<double> logs(static_cast<std::size_t>(p.k()));
    for (Eigen::Index k = 0; k < p.k(); ++k) {
      const RowVector diff = x.row(i) - p.means.row(k);
      const Matrix& s = p.covariances[static_cast<std::size_t>(k)];
      const double maha = (diff * s.inverse() * diff.transpose())(0, 0);
      logs[static_cast<std::size_t>(k)] = std::log(p.weights(k)) - 0.5 * std::log(s.determinant()) - 0.5 * maha;
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    double total = 0.0;
    for (Eigen::Index k = 0; k < p.k(); ++k) {
      g(i, k) = std::exp(logs[static_cast<std::size_t>(k)] - top);
      total += g(i, k);
    }
    double renorm = 0.0;
    for (Eigen::Index k = 0; k < p.k(); ++k) {
      g(i, k) = std::max(g(i, k) / total, floor);
      renorm += g(i, k);
    }
    for (Eigen::Index k = 0; k < p.k(); ++k) g(i, k) /= renorm;
  }
  return g;
}

/// One plain EM iteration written with explicit loops: weights, means and
/// covariances from responsibilities, covariance floor on the diagonal.
inline MixtureParams naive_m_step(const Matrix& x, const Matrix& g, double covariance_floor) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index kk = g.cols();
  MixtureParams p;
  p.weights.resize(kk);
  p.means.resize(kk, d);
  for (Eigen::Index k = 0; k < kk; ++k) {
    double mass = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mass += g(i, k);
    p.weights(k) = mass / static_cast<double>(n);
    for (Eigen::Index c = 0; c < d; ++c) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += g(i, k) * x(i, c);
      p.means(k, c) = acc / mass;
    }
    Matrix s = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
          s(a, b) += g(i, k) * (x(i, a) - p.means(k, a)) * (x(i, b) - p.means(k, b));
        }
      }
    }
    s /= mass;
    for (Eigen::Index a = 0; a < d; ++a) s(a, a) += covariance_floor;
    p.covariances.push_back(s);
  }
  return p;
}

/// Marginal log-likelihood sum_i log sum_k alpha_k N(x_i; mu_k, Sigma_k).
inline double naive_marginal_log_likelihood(const Matrix& x, const MixtureParams& p) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mix = 0.0;
    for (Eigen::Index k = 0; k < p.k(); ++k) {
      mix += p.weights(k) * naive_gaussian_density(x.row(i), p.means.row(k),
                                                   p.covariances[static_cast<std::size_t>(k)]);
    }
    total += std::log(mix);
  }
  return total;
}

inline SegmentationMask random_mask(std::mt19937_64& rng, int w, int h, int k) {
  std::uniform_int_distribution<int> label(0, k - 1);
  SegmentationMask m{w, h, std::vector<int>(static_cast<std::size_t>(w) * h)};
  for (int& v : m.labels) v = label(rng);
  return m;
}

/// Mask made of a few random rectangles painted over a random background,
/// so classes are spatially coherent like real segmentations.
inline SegmentationMask random_blocky_mask(std::mt19937_64& rng, int w, int h, int k) {
  std::uniform_int_distribution<int> label(0, k - 1);
  std::uniform_int_distribution<int> px(0, w - 1);
  std::uniform_int_distribution<int> py(0, h - 1);
  SegmentationMask m{w, h, std::vector<int>(static_cast<std::size_t>(w) * h, label(rng))};
  for (int r = 0; r < 6; ++r) {
    int x0 = px(rng), x1 = px(rng), y0 = py(rng), y1 = py(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const int c = label(rng);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) m.labels[static_cast<std::size_t>(y) * w + x] = c;
    }
  }
  return m;
}

inline InstanceMask random_instance_mask(std::mt19937_64& rng, int w, int h, int max_instances) {
  std::uniform_int_distribution<int> count(1, max_instances);
  std::uniform_int_distribution<int> px(0, w - 1);
  std::uniform_int_distribution<int> py(0, h - 1);
  std::uniform_int_distribution<int> size(1, std::max(2, w / 3));
  InstanceMask m{w, h, std::vector<int>(static_cast<std::size_t>(w) * h, 0)};
  const int n = count(rng);
  for (int id = 1; id <= n; ++id) {
    const int x0 = px(rng), y0 = py(rng), sw = size(rng), sh = size(rng);
    for (int y = y0; y < std::min(h, y0 + sh); ++y) {
      for (int x = x0; x < std::min(w, x0 + sw); ++x) m.ids[static_cast<std::size_t>(y) * w + x] = id;
    }
  }
  return m;
}

/// Best permutation by trying every one; perm[p] = ground-truth class.
inline std::vector<int> brute_force_alignment(const SegmentationMask& pred,
                                              const SegmentationMask& gt, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::vector<int> best = perm;
  long long best_score = -1;
  do {
    long long score = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      score += perm[static_cast<std::size_t>(pred.labels[i])] == gt.labels[i];
    }
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct SetScores {
  double precision, recall, dice;
};

/// Precision, recall and Dice from explicit pixel-index sets.
inline SetScores set_scores(const SegmentationMask& pred, const SegmentationMask& gt, int c) {
  std::set<std::size_t> p, g;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.labels[i] == c) p.insert(i);
    if (gt.labels[i] == c) g.insert(i);
  }
  std::vector<std::size_t> inter;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(inter));
  const double tp = static_cast<double>(inter.size());
  if (p.empty() && g.empty()) return {1.0, 1.0, 1.0};
  SetScores s{};
  s.precision = p.empty() ? 0.0 : tp / static_cast<double>(p.size());
  s.recall = g.empty() ? 0.0 : tp / static_cast<double>(g.size());
  s.dice = 2.0 * tp / static_cast<double>(p.size() + g.size());
  return s;
}

struct SetAji {
  double standard, paper;
};

/// AJI from pixel sets: pairs are matched greedily by decreasing overlap
/// (ties by ground-truth id, then prediction id), each prediction used once.
inline SetAji set_aji(const InstanceMask& gt, const InstanceMask& pred, double eps) {
  std::map<int, std::set<std::size_t>> g, p;
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    if (gt.ids[i] > 0) g[gt.ids[i]].insert(i);
    if (pred.ids[i] > 0) p[pred.ids[i]].insert(i);
  }
  struct Cand {
    std::size_t inter;
    int gi, pi;
  };
  std::vector<Cand> cands;
  for (const auto& [gi, gs] : g) {
    for (const auto& [pi, ps] : p) {
      std::vector<std::size_t> inter;
      std::set_intersection(gs.begin(), gs.end(), ps.begin(), ps.end(), std::back_inserter(inter));
      if (!inter.empty()) cands.push_back({inter.size(), gi, pi});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.inter != b.inter) return a.inter > b.inter;
    if (a.gi != b.gi) return a.gi < b.gi;
    return a.pi < b.pi;
  });
  std::map<int, int> match;
  std::set<int> used;
  for (const auto& c : cands) {
    if (match.count(c.gi) || used.count(c.pi)) continue;
    match[c.gi] = c.pi;
    used.insert(c.pi);
  }
  double inter_total = 0.0, union_total = 0.0, paper = 0.0;
  for (const auto& [gi, gs] : g) {
    std::set<std::size_t> uni = gs;
    double inter = 0.0;
    if (match.count(gi)) {
      const auto& ps = p[match[gi]];
      uni.insert(ps.begin(), ps.end());
      std::vector<std::size_t> in;
      std::set_intersection(gs.begin(), gs.end(), ps.begin(), ps.end(), std::back_inserter(in));
      inter = static_cast<double>(in.size());
    }
    inter_total += inter;
    union_total += static_cast<double>(uni.size());
    paper += inter / (static_cast<double>(uni.size()) + eps);
  }
  for (const auto& [pi, ps] : p) {
    if (!used.count(pi)) union_total += static_cast<double>(ps.size());
  }
  return {inter_total / union_total, paper / static_cast<double>(g.size())};
}

/// Mutual information from a map-based contingency table.
inline double table_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0 / n;
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [key, p] : joint) mi += p * std::log(p / (pa[key.first] * pb[key.second]));
  return mi;
}

inline double table_entropy(const std::vector<int>& a) {
  std::map<int, double> p;
  for (int v : a) p[v] += 1.0 / static_cast<double>(a.size());
  double h = 0.0;
  for (const auto& [v, q] : p) h -= q * std::log(q);
  return h;
}

/// Two-sided Wilcoxon p-value by listing every sign pattern of the non-zero
/// differences (average ranks for ties).
inline double enumerate_wilcoxon_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) less += 1.0;
      if (std::abs(d[j]) == std::abs(d[i])) equal += 1.0;
    }
    ranks[i] = less + (equal + 1.0) / 2.0;
  }
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) observed += ranks[i];
  }
  double lower = 0.0, upper = 0.0;
  const std::uint64_t patterns = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) w += ranks[i];
    }
    if (w <= observed + 1e-9) lower += 1.0;
    if (w >= observed - 1e-9) upper += 1.0;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / static_cast<double>(patterns));
}

}  // namespace dcgn::testing
