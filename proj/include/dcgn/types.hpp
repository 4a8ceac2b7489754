#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcgn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Malformed caller input: bad shapes, out-of-range values, unreadable files.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure that cannot continue (non-PD covariance, NaN loss,
/// an empty responsibility column).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major, channel-interleaved image. Values are finite; operations that
/// need the [0,1] range check it with require_unit_range().
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int width, int height, int channels, std::vector<double> data);

  static ImageTensor zeros(int width, int height, int channels);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double operator()(int x, int y, int c) const { return data_[index(x, y, c)]; }
  double& operator()(int x, int y, int c) { return data_[index(x, y, c)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool in_unit_range() const;
  void require_unit_range(const char* what) const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// N flattened D-dimensional samples, one per row.
class PixelBatch {
 public:
  PixelBatch() = default;
  explicit PixelBatch(Matrix samples);

  const Matrix& samples() const { return samples_; }
  Eigen::Index n_samples() const { return samples_.rows(); }
  Eigen::Index dim() const { return samples_.cols(); }

 private:
  Matrix samples_;
};

struct BatchStats {
  Vector mean;
  Vector variance;  // population variance, floored
};

/// Mixture weights, K x D means and K stacked D x D covariances.
struct MixtureParams {
  Vector weights;
  Matrix means;
  std::vector<Matrix> covariances;

  Eigen::Index k() const { return means.rows(); }
  Eigen::Index dim() const { return means.cols(); }

  /// Throws InvalidInput if any structural or numerical invariant fails.
  void validate(double covariance_floor) const;
};

/// Per-sample responsibilities: an N x K row-stochastic matrix.
struct PosteriorField {
  Matrix gamma;

  Eigen::Index n_samples() const { return gamma.rows(); }
  Eigen::Index k() const { return gamma.cols(); }
};

struct SegmentationMask {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const SegmentationMask&, const SegmentationMask&) = default;
};

/// 0 is background; each positive id is one instance.
struct InstanceMask {
  int width = 0;
  int height = 0;
  std::vector<int> ids;

  /// Renumbers ids to the contiguous set {0..M} in first-appearance order.
  void canonicalize();

  friend bool operator==(const InstanceMask&, const InstanceMask&) = default;
};

/// Which side of the observed mean the centring correction is decided on.
enum class CentringSign {
  /// Sign taken at the updated mean itself; the correction never crosses the
  /// observed mean (soft threshold).
  SelfConsistent,
  /// Sign taken from the previous mean iterate, applied as printed.
  PreviousIterate,
};

/// Whether the likelihood term enters the constrained objective as a sum over
/// samples or as a per-sample average.
enum class ObjectiveScale {
  Sum,
  PerSample,
};

struct RunConfig {
  int k = 3;
  double lambda = 0.005;
  double learning_rate = 5e-5;
  double lr_decay = 0.98;
  int epochs = 200;
  int batch_size = 4096;
  std::uint64_t seed = 0;
  double gamma_floor = 1e-8;
  double covariance_floor = 1e-6;
  double variance_floor = 1e-6;
  CentringSign centring = CentringSign::SelfConsistent;
  ObjectiveScale objective_scale = ObjectiveScale::Sum;
  bool augment = false;

  void validate() const;
};

/// An image with its semantic ground truth and, when available, instance ids.
struct LabeledImage {
  ImageTensor image;
  SegmentationMask truth;
  std::optional<InstanceMask> instances;
};

std::string to_string(CentringSign sign);
std::string to_string(ObjectiveScale scale);
CentringSign parse_centring_sign(const std::string& text);
ObjectiveScale parse_objective_scale(const std::string& text);

}  // namespace dcgn
