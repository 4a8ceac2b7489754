#include "dcgn/degeneration.hpp"

#include "dcgn/core.hpp"

namespace dcgn {

std::vector<double> class_fractions(const SegmentationMask& mask, int k) {
  if (mask.size() == 0) throw InvalidInput("mask is empty");
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (int label : mask.labels) {
    if (label < 0 || label >= k) throw InvalidInput("label outside [0, K)");
    counts[static_cast<std::size_t>(label)] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(mask.size());
  return counts;
}

bool detect_collapse(const SegmentationMask& mask, double threshold) {
  if (mask.size() == 0) throw InvalidInput("mask is empty");
  int k = 0;
  for (int label : mask.labels) k = std::max(k, label + 1);
  // Compare counts rather than fractions so boundary cases are exact.
  std::vector<long long> counts(static_cast<std::size_t>(k), 0);
  for (int label : mask.labels) {
    if (label < 0) throw InvalidInput("labels must be non-negative");
    ++counts[static_cast<std::size_t>(label)];
  }
  const long long top = *std::max_element(counts.begin(), counts.end());
  return static_cast<double>(top) >= threshold * static_cast<double>(mask.size()) * (1.0 - 1e-12);
}

std::vector<int> detect_empty_classes(const SegmentationMask& mask, int k, double ratio) {
  if (k < 2) throw InvalidInput("k must be at least 2");
  if (mask.size() == 0) throw InvalidInput("mask is empty");
  std::vector<long long> counts(static_cast<std::size_t>(k), 0);
  for (int label : mask.labels) {
    if (label < 0 || label >= k) throw InvalidInput("label outside [0, K)");
    ++counts[static_cast<std::size_t>(label)];
  }
  const double limit = ratio * static_cast<double>(mask.size());
  std::vector<int> out;
  for (int c = 0; c < k; ++c) {
    const auto count = static_cast<double>(counts[static_cast<std::size_t>(c)]);
    // Strict, with a relative guard so 1.0% computed as 0.0099999... is not listed.
    if (count < limit * (1.0 - 1e-12)) out.push_back(c);
  }
  return out;
}

bool assess_instability(std::span<const double> per_run_mean_dice, double threshold) {
  if (per_run_mean_dice.size() < 2) throw InvalidInput("instability needs at least 2 runs");
  return population_std(per_run_mean_dice) > threshold;
}

double aligned_mean_dice(const SegmentationMask& pred, const SegmentationMask& gt, int k_pred,
                         int k_gt) {
  const std::vector<int> perm = align_labels(pred, gt, k_pred, k_gt);
  const SegmentationMask mapped = apply_alignment(pred, perm);

  SegmentationMask kept_pred{0, 1, {}};
  SegmentationMask kept_gt{0, 1, {}};
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    if (mapped.labels[i] < 0) continue;
    kept_pred.labels.push_back(mapped.labels[i]);
    kept_gt.labels.push_back(gt.labels[i]);
  }
  kept_pred.width = kept_gt.width = static_cast<int>(kept_pred.labels.size());

  double total = 0.0;
  for (int c = 0; c < k_gt; ++c) total += dice_precision_recall(kept_pred, kept_gt, c).dice;
  return total / k_gt;
}

RedundantClassAssessment assess_redundant_class(std::span<const LabeledImage> dataset,
                                                const SegmentFn& method, int k,
                                                const RunConfig& config, int repeats) {
  if (dataset.empty()) throw InvalidInput("redundant-class assessment needs images");
  if (repeats < 1) throw InvalidInput("repeats must be positive");
  RedundantClassAssessment out;
  for (int r = 0; r < repeats; ++r) {
    RunConfig run = config;
    run.seed = config.seed + static_cast<std::uint64_t>(r);
    double base = 0.0, extra = 0.0;
    for (const auto& item : dataset) {
      run.k = k;
      base += aligned_mean_dice(method(item.image, k, run), item.truth, k, k);
      run.k = k + 1;
      extra += aligned_mean_dice(method(item.image, k + 1, run), item.truth, k + 1, k);
    }
    out.gains.push_back((extra - base) / static_cast<double>(dataset.size()));
  }
  out.mean_gain = mean_of(out.gains);
  out.flagged = out.mean_gain > kRedundantGainThreshold;
  return out;
}

}  // namespace dcgn
