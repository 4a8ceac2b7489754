#include "dcgn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace dcgn {

namespace {

constexpr int kBruteForceAlignLimit = 8;

void check_same_shape(const SegmentationMask& a, const SegmentationMask& b) {
  if (a.width != b.width || a.height != b.height || a.size() != b.size()) {
    throw InvalidInput("masks have different dimensions");
  }
}

int max_label(std::span<const int> labels) {
  int m = -1;
  for (int v : labels) {
    if (v < 0) throw InvalidInput("labels must be non-negative");
    m = std::max(m, v);
  }
  return m;
}

// Exhaustive search in lexicographic order; the first optimum found is the
// lexicographically smallest.
std::vector<int> best_permutation_brute(const Eigen::MatrixXi& score) {
  const int n = static_cast<int>(score.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  long long best_total = std::numeric_limits<long long>::min();
  do {
    long long total = 0;
    for (int p = 0; p < n; ++p) total += score(p, perm[static_cast<std::size_t>(p)]);
    if (total > best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Hungarian algorithm (potentials form) maximising the total score.
std::vector<int> best_permutation_hungarian(const Eigen::MatrixXi& score) {
  const int n = static_cast<int>(score.rows());
  const long long big = score.size() > 0 ? score.maxCoeff() : 0;
  std::vector<long long> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(n + 1, std::numeric_limits<long long>::max());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      long long delta = std::numeric_limits<long long>::max();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cost = big - score(i0 - 1, j - 1);
        const long long cur = cost - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) perm[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return perm;
}

}  // namespace

Eigen::MatrixXi contingency(std::span<const int> pred, std::span<const int> gt, int k_pred,
                            int k_gt) {
  if (pred.size() != gt.size()) throw InvalidInput("label arrays differ in length");
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(k_pred, k_gt);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i];
    const int g = gt[i];
    if (p < 0 || p >= k_pred || g < 0 || g >= k_gt) {
      throw InvalidInput("label outside [0, K)");
    }
    ++counts(p, g);
  }
  return counts;
}

std::vector<int> align_labels(const SegmentationMask& pred, const SegmentationMask& gt,
                              int k_pred, int k_gt) {
  check_same_shape(pred, gt);
  if (k_pred < 1 || k_gt < 1) throw InvalidInput("class counts must be positive");
  const Eigen::MatrixXi counts = contingency(pred.labels, gt.labels, k_pred, k_gt);
  const int n = std::max(k_pred, k_gt);
  Eigen::MatrixXi square = Eigen::MatrixXi::Zero(n, n);
  square.topLeftCorner(k_pred, k_gt) = counts;

  const std::vector<int> full = n <= kBruteForceAlignLimit ? best_permutation_brute(square)
                                                           : best_permutation_hungarian(square);
  std::vector<int> perm(static_cast<std::size_t>(k_pred));
  for (int p = 0; p < k_pred; ++p) {
    const int g = full[static_cast<std::size_t>(p)];
    perm[static_cast<std::size_t>(p)] = g < k_gt ? g : -1;
  }
  return perm;
}

std::vector<int> align_labels(const SegmentationMask& pred, const SegmentationMask& gt, int k) {
  return align_labels(pred, gt, k, k);
}

SegmentationMask apply_alignment(const SegmentationMask& pred, std::span<const int> perm) {
  SegmentationMask out = pred;
  for (int& label : out.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= perm.size()) {
      throw InvalidInput("label outside the permutation");
    }
    label = perm[static_cast<std::size_t>(label)];
  }
  return out;
}

ClassScores dice_precision_recall(const SegmentationMask& pred, const SegmentationMask& gt,
                                  int class_id) {
  check_same_shape(pred, gt);
  long long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.labels[i] == class_id;
    const bool g = gt.labels[i] == class_id;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  const bool both_empty = tp + fp == 0 && tp + fn == 0;
  auto ratio = [both_empty](double num, double den) {
    if (den == 0.0) return both_empty ? 1.0 : 0.0;
    return num / den;
  };
  ClassScores s;
  s.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  s.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  s.dice = ratio(2.0 * static_cast<double>(tp), static_cast<double>(2 * tp + fp + fn));
  return s;
}

AjiResult aji(const InstanceMask& gt, const InstanceMask& pred, double epsilon) {
  if (gt.width != pred.width || gt.height != pred.height || gt.ids.size() != pred.ids.size()) {
    throw InvalidInput("instance masks have different dimensions");
  }
  std::map<int, long long> gt_area, pred_area;
  std::map<std::pair<int, int>, long long> overlap;
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    const int g = gt.ids[i];
    const int p = pred.ids[i];
    if (g < 0 || p < 0) throw InvalidInput("instance ids must be non-negative");
    if (g > 0) ++gt_area[g];
    if (p > 0) ++pred_area[p];
    if (g > 0 && p > 0) ++overlap[{g, p}];
  }
  if (gt_area.empty()) throw InvalidInput("ground truth has no instances");

  struct Pair {
    long long inter;
    int g;
    int p;
  };
  std::vector<Pair> pairs;
  pairs.reserve(overlap.size());
  for (const auto& [key, inter] : overlap) pairs.push_back({inter, key.first, key.second});
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.inter > b.inter; });

  std::map<int, int> match;  // gt id -> pred id
  std::map<int, bool> pred_used;
  for (const auto& pr : pairs) {
    if (match.contains(pr.g) || pred_used[pr.p]) continue;
    match[pr.g] = pr.p;
    pred_used[pr.p] = true;
  }

  double inter_sum = 0.0, union_sum = 0.0, paper_sum = 0.0;
  for (const auto& [g, area] : gt_area) {
    double inter = 0.0;
    double uni = static_cast<double>(area);
    if (auto it = match.find(g); it != match.end()) {
      inter = static_cast<double>(overlap[{g, it->second}]);
      uni = static_cast<double>(area + pred_area[it->second]) - inter;
    }
    inter_sum += inter;
    union_sum += uni;
    paper_sum += inter / (uni + epsilon);
  }
  for (const auto& [p, area] : pred_area) {
    if (!pred_used[p]) union_sum += static_cast<double>(area);
  }
  AjiResult r;
  r.aji_standard = inter_sum / union_sum;
  r.aji_paper = paper_sum / static_cast<double>(gt_area.size());
  return r;
}

InstanceMask connected_instances(const SegmentationMask& mask, int class_id) {
  InstanceMask out{mask.width, mask.height, std::vector<int>(mask.size(), 0)};
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (mask.labels[start] != class_id || out.ids[start] != 0) continue;
    ++next;
    out.ids[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(i % static_cast<std::size_t>(mask.width));
      const int y = static_cast<int>(i / static_cast<std::size_t>(mask.width));
      const int nx[] = {x - 1, x + 1, x, x};
      const int ny[] = {y, y, y - 1, y + 1};
      for (int t = 0; t < 4; ++t) {
        if (nx[t] < 0 || ny[t] < 0 || nx[t] >= mask.width || ny[t] >= mask.height) continue;
        const std::size_t j = static_cast<std::size_t>(ny[t]) * mask.width + nx[t];
        if (mask.labels[j] == class_id && out.ids[j] == 0) {
          out.ids[j] = next;
          stack.push_back(j);
        }
      }
    }
  }
  return out;
}

double entropy(std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  const int k = max_label(labels) + 1;
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (int v : labels) counts[static_cast<std::size_t>(v)] += 1.0;
  const double n = static_cast<double>(labels.size());
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

double mutual_information(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidInput("label arrays differ in length");
  if (a.empty()) throw InvalidInput("label arrays are empty");
  const int ka = max_label(a) + 1;
  const int kb = max_label(b) + 1;
  const Eigen::MatrixXi joint = contingency(a, b, ka, kb);
  const Eigen::VectorXd pa = joint.rowwise().sum().cast<double>();
  const Eigen::RowVectorXd pb = joint.colwise().sum().cast<double>();
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (int i = 0; i < ka; ++i) {
    for (int j = 0; j < kb; ++j) {
      const double c = joint(i, j);
      if (c == 0.0) continue;
      mi += (c / n) * std::log(c * n / (pa(i) * pb(j)));
    }
  }
  return std::max(mi, 0.0);
}

double nmi(std::span<const int> gt, std::span<const int> pred) {
  if (gt.size() != pred.size()) throw InvalidInput("label arrays differ in length");
  const double denom = entropy(gt) + entropy(pred);
  if (denom == 0.0) return std::equal(gt.begin(), gt.end(), pred.begin()) ? 1.0 : 0.0;
  return std::clamp(2.0 * mutual_information(gt, pred) / denom, 0.0, 1.0);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method) {
  if (a.size() != b.size()) throw InvalidInput("paired samples differ in length");
  if (a.empty()) throw InvalidInput("paired samples are empty");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw InvalidInput("paired samples must be finite");
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult r;
  r.n_effective = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    r.degenerate = true;
    r.p_two_sided = 1.0;
    r.method = WilcoxonMethod::Exact;
    return r;
  }

  const int n = r.n_effective;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return std::abs(diffs[static_cast<std::size_t>(i)]) < std::abs(diffs[static_cast<std::size_t>(j)]);
  });
  // Doubled ranks stay integral under tie averaging.
  std::vector<int> rank2(static_cast<std::size_t>(n));
  double tie_term = 0.0;
  for (int s = 0; s < n;) {
    int e = s;
    const double v = std::abs(diffs[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])]);
    while (e + 1 < n &&
           std::abs(diffs[static_cast<std::size_t>(order[static_cast<std::size_t>(e + 1)])]) == v) {
      ++e;
    }
    for (int t = s; t <= e; ++t) rank2[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = s + e + 2;
    const double size = e - s + 1;
    tie_term += size * size * size - size;
    s = e + 1;
  }
  int w2 = 0;
  for (int i = 0; i < n; ++i) {
    if (diffs[static_cast<std::size_t>(i)] > 0.0) w2 += rank2[static_cast<std::size_t>(i)];
  }
  r.statistic = w2 / 2.0;

  const bool exact = method == WilcoxonMethod::Exact ||
                     (method == WilcoxonMethod::Auto && n <= kExactWilcoxonLimit);
  if (exact) {
    r.method = WilcoxonMethod::Exact;
    const int total2 = std::accumulate(rank2.begin(), rank2.end(), 0);
    std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
    ways[0] = 1.0;
    for (int rk : rank2) {
      for (int s = total2; s >= rk; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - rk)];
    }
    const double patterns = std::ldexp(1.0, n);
    double lower = 0.0, upper = 0.0;
    for (int s = 0; s <= total2; ++s) {
      if (s <= w2) lower += ways[static_cast<std::size_t>(s)];
      if (s >= w2) upper += ways[static_cast<std::size_t>(s)];
    }
    r.p_two_sided = std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
  } else {
    r.method = WilcoxonMethod::NormalApproximation;
    const double nn = n;
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(std::abs(r.statistic - mean) - 0.5, 0.0) / std::sqrt(var);
    r.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }
  return r;
}

std::string to_string(WilcoxonMethod method) {
  switch (method) {
    case WilcoxonMethod::Exact:
      return "exact";
    case WilcoxonMethod::NormalApproximation:
      return "normal-approximation";
    case WilcoxonMethod::Auto:
      break;
  }
  return "auto";
}

}  // namespace dcgn
