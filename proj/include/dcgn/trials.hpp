#pragma once

#include "dcgn/degeneration.hpp"

#include <iosfwd>

namespace dcgn {

enum class Method { Dcgn, ConstrainedEm, Gmm, Kmeans };

std::string to_string(Method method);
/// Accepts dcgn, cgmm-em, gmm and kmeans.
Method parse_method(const std::string& text);
std::vector<Method> parse_method_list(const std::string& comma_separated);

struct MethodOutput {
  SegmentationMask mask;
  int epochs = 0;  // iterations for EM, epochs for k-means, epochs to convergence for DCGN
};

/// Fits `method` to one normalised image and labels its pixels.
MethodOutput run_method(Method method, const ImageTensor& img, const RunConfig& config);

/// run_method with k substituted into the config.
SegmentFn segment_fn(Method method);

struct TrialReport {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string method;
  int k = 0;
  double lambda = 0.0;
  ScoreSet scores;  // averaged over images; precision/recall/dice are class macro means
  DegenerationReport degeneration;  // counts are numbers of images
  int epochs = 0;                   // mean over images, rounded down
  std::optional<double> wall_ms;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

/// Aligned scores of one prediction. AJI uses the ground-truth instances when
/// present, else the connected components of class 1 when k = 2.
ScoreSet score_prediction(const SegmentationMask& pred, const LabeledImage& truth, int k);

struct TrialOptions {
  bool record_time = false;
};

/// For each method and repeat r, runs every image with seed config.seed + r.
/// Images are min-max normalised first. Reports come out in method-major order.
std::vector<TrialReport> run_repeated_trials(std::span<const LabeledImage> dataset,
                                             std::span<const Method> methods,
                                             const RunConfig& config, int repeats,
                                             TrialOptions options = {});

struct MethodSummary {
  std::string method;
  int runs = 0;
  double mean_dice = 0.0;
  double std_dice = 0.0;  // population std over runs
  double max_dice = 0.0;  // upper bound
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_nmi = 0.0;
  std::optional<double> mean_aji;
  double mean_epochs = 0.0;
  int collapse_images = 0;
  int empty_class_images = 0;
  bool unstable = false;
};

struct PairwiseTest {
  std::string method_a;
  std::string method_b;
  WilcoxonResult test;  // over per-run mean Dice, paired by repeat index
};

struct TrialSummary {
  std::vector<MethodSummary> methods;  // first-appearance order
  std::vector<PairwiseTest> pairs;
};

TrialSummary summarize_trials(std::span<const TrialReport> reports);

inline constexpr const char* kTrialCsvHeader =
    "run_id,seed,method,k,lambda,precision,recall,dice,aji_standard,aji_paper,nmi,mi,collapse,"
    "empty_classes,epochs,wall_ms";

/// Doubles are written with 17 significant digits so reading back is exact.
void write_trials_csv(std::ostream& out, std::span<const TrialReport> reports);
std::vector<TrialReport> read_trials_csv(std::istream& in);

void write_summary_csv(std::ostream& out, const TrialSummary& summary);
void write_pairwise_csv(std::ostream& out, const TrialSummary& summary);
void write_degeneration_csv(std::ostream& out, const TrialSummary& summary);

}  // namespace dcgn
