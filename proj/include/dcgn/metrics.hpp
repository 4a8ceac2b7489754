#pragma once

#include "dcgn/types.hpp"

#include <optional>

namespace dcgn {

inline constexpr double kAjiEpsilon = 1e-6;
inline constexpr int kExactWilcoxonLimit = 20;

struct ScoreSet {
  double precision = 0.0;
  double recall = 0.0;
  double dice = 0.0;
  std::optional<double> aji;  // aggregated (standard) AJI
  std::optional<double> aji_paper;
  double nmi = 0.0;
  double mi = 0.0;

  friend bool operator==(const ScoreSet&, const ScoreSet&) = default;
};

/// counts(p, g) = number of pixels with prediction p and ground truth g.
Eigen::MatrixXi contingency(std::span<const int> pred, std::span<const int> gt, int k_pred,
                            int k_gt);

/// perm[p] is the ground-truth class assigned to predicted class p, chosen to
/// maximise the total matched intersection. Among optimal assignments the
/// lexicographically smallest permutation is returned.
std::vector<int> align_labels(const SegmentationMask& pred, const SegmentationMask& gt, int k);

/// Rectangular variant. perm[p] is -1 for predicted classes left unmatched
/// when k_pred > k_gt.
std::vector<int> align_labels(const SegmentationMask& pred, const SegmentationMask& gt,
                              int k_pred, int k_gt);

/// Relabels pred through perm; pixels of unmatched classes become -1.
SegmentationMask apply_alignment(const SegmentationMask& pred, std::span<const int> perm);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double dice = 0.0;
};

ClassScores dice_precision_recall(const SegmentationMask& pred, const SegmentationMask& gt,
                                  int class_id);

struct AjiResult {
  double aji_standard = 0.0;
  double aji_paper = 0.0;
};

AjiResult aji(const InstanceMask& gt, const InstanceMask& pred, double epsilon = kAjiEpsilon);

/// 4-connected components of the pixels equal to class_id, numbered from 1 in
/// scan order.
InstanceMask connected_instances(const SegmentationMask& mask, int class_id);

/// Empirical mutual information in nats.
double mutual_information(std::span<const int> a, std::span<const int> b);

/// Empirical entropy in nats.
double entropy(std::span<const int> labels);

double nmi(std::span<const int> gt, std::span<const int> pred);

enum class WilcoxonMethod { Auto, Exact, NormalApproximation };

struct WilcoxonResult {
  double statistic = 0.0;  // sum of ranks of positive differences
  double p_two_sided = 1.0;
  int n_effective = 0;
  WilcoxonMethod method = WilcoxonMethod::Exact;
  bool degenerate = false;
};

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method = WilcoxonMethod::Auto);

std::string to_string(WilcoxonMethod method);

}  // namespace dcgn
