#pragma once

#include "dcgn/metrics.hpp"

#include <functional>

namespace dcgn {

inline constexpr double kCollapseThreshold = 0.97;
inline constexpr double kEmptyClassRatio = 0.01;
inline constexpr double kInstabilityThreshold = 0.08;
inline constexpr double kRedundantGainThreshold = 0.01;

struct DegenerationReport {
  bool collapse = false;
  std::vector<int> empty_classes;
  bool unstable = false;
  double redundant_class_gain = 0.0;
  // Counts over a set of runs.
  int collapse_count = 0;
  int empty_class_count = 0;

  friend bool operator==(const DegenerationReport&, const DegenerationReport&) = default;
};

/// Fraction of pixels carrying each label in [0, k).
std::vector<double> class_fractions(const SegmentationMask& mask, int k);

/// True iff some class covers at least `threshold` of the pixels.
bool detect_collapse(const SegmentationMask& mask, double threshold = kCollapseThreshold);

/// Classes in [0, k) whose pixel ratio is strictly below `ratio`.
std::vector<int> detect_empty_classes(const SegmentationMask& mask, int k,
                                      double ratio = kEmptyClassRatio);

/// True iff the population std of the per-run mean Dice exceeds `threshold`.
bool assess_instability(std::span<const double> per_run_mean_dice,
                        double threshold = kInstabilityThreshold);

/// Any segmentation method: image, class count and run settings in, labels out.
using SegmentFn =
    std::function<SegmentationMask(const ImageTensor& img, int k, const RunConfig& config)>;

/// Mean Dice over the ground-truth classes after aligning k_pred predicted
/// classes to k_gt ground-truth classes. When k_pred > k_gt, pixels predicted
/// as an unmatched class are removed from the evaluation.
double aligned_mean_dice(const SegmentationMask& pred, const SegmentationMask& gt, int k_pred,
                         int k_gt);

struct RedundantClassAssessment {
  std::vector<double> gains;  // one per repeat, seed = config.seed + r
  double mean_gain = 0.0;
  bool flagged = false;       // mean_gain > kRedundantGainThreshold
};

/// Runs `method` at K=k and K=k+1 with the same seeds on every image and
/// compares aligned mean Dice, dropping the surplus class at K=k+1.
RedundantClassAssessment assess_redundant_class(std::span<const LabeledImage> dataset,
                                                const SegmentFn& method, int k,
                                                const RunConfig& config, int repeats);

}  // namespace dcgn
