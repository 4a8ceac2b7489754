#include "dcgn/core.hpp"

#include <map>
#include <numeric>

namespace dcgn {

ImageTensor::ImageTensor(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 1 || height < 1) throw InvalidInput("image dimensions must be positive");
  if (channels < 1) throw InvalidInput("image must have at least one channel");
  const auto expected = static_cast<std::size_t>(width) * height * channels;
  if (data_.size() != expected) {
    throw InvalidInput("image data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(width) + "x" +
                       std::to_string(height) + "x" + std::to_string(channels));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvalidInput("image contains a non-finite value");
  }
}

ImageTensor ImageTensor::zeros(int width, int height, int channels) {
  return ImageTensor(width, height, channels,
                     std::vector<double>(static_cast<std::size_t>(width) * height * channels, 0.0));
}

bool ImageTensor::in_unit_range() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

void ImageTensor::require_unit_range(const char* what) const {
  if (!in_unit_range()) {
    throw InvalidInput(std::string(what) + ": image values must lie in [0,1]");
  }
}

PixelBatch::PixelBatch(Matrix samples) : samples_(std::move(samples)) {
  if (samples_.rows() < 1) throw InvalidInput("pixel batch needs at least one sample");
  if (samples_.cols() < 1) throw InvalidInput("pixel batch needs at least one dimension");
  if (!samples_.allFinite()) throw InvalidInput("pixel batch contains a non-finite value");
}

void MixtureParams::validate(double covariance_floor) const {
  const auto kk = k();
  const auto d = dim();
  if (kk < 1) throw InvalidInput("mixture has no components");
  if (weights.size() != kk) throw InvalidInput("mixture weight count does not match K");
  if (static_cast<Eigen::Index>(covariances.size()) != kk) {
    throw InvalidInput("mixture covariance count does not match K");
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw InvalidInput("mixture weights are not on the probability simplex");
  }
  if (!means.allFinite()) throw InvalidInput("mixture means are not finite");
  for (Eigen::Index c = 0; c < kk; ++c) {
    const Matrix& s = covariances[static_cast<std::size_t>(c)];
    if (s.rows() != d || s.cols() != d) {
      throw InvalidInput("covariance " + std::to_string(c) + " has the wrong shape");
    }
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidInput("covariance " + std::to_string(c) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < covariance_floor * (1.0 - 1e-9)) {
      throw InvalidInput("covariance " + std::to_string(c) + " falls below the covariance floor");
    }
  }
}

void InstanceMask::canonicalize() {
  std::map<int, int> remap{{0, 0}};
  int next = 1;
  for (int& id : ids) {
    auto [it, inserted] = remap.try_emplace(id, next);
    if (inserted) ++next;
    id = it->second;
  }
}

void RunConfig::validate() const {
  if (k < 2) throw InvalidInput("k must be at least 2");
  if (!(lambda >= 0.0)) throw InvalidInput("lambda must be non-negative");
  if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InvalidInput("lr_decay must lie in (0,1]");
  if (epochs < 1) throw InvalidInput("epochs must be at least 1");
  if (batch_size < 1) throw InvalidInput("batch_size must be at least 1");
  if (!(gamma_floor > 0.0) || !(covariance_floor > 0.0) || !(variance_floor > 0.0)) {
    throw InvalidInput("numerical floors must be positive");
  }
}

std::string to_string(CentringSign sign) {
  return sign == CentringSign::SelfConsistent ? "self-consistent" : "previous-iterate";
}

std::string to_string(ObjectiveScale scale) {
  return scale == ObjectiveScale::Sum ? "sum" : "per-sample";
}

CentringSign parse_centring_sign(const std::string& text) {
  if (text == "self-consistent") return CentringSign::SelfConsistent;
  if (text == "previous-iterate") return CentringSign::PreviousIterate;
  throw InvalidInput("unknown centring rule '" + text + "'");
}

ObjectiveScale parse_objective_scale(const std::string& text) {
  if (text == "sum") return ObjectiveScale::Sum;
  if (text == "per-sample") return ObjectiveScale::PerSample;
  throw InvalidInput("unknown objective scale '" + text + "'");
}

PixelBatch flatten_image(const ImageTensor& img) {
  const auto n = static_cast<Eigen::Index>(img.pixel_count());
  const auto d = static_cast<Eigen::Index>(img.channels());
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix samples = Eigen::Map<const RowMajor>(img.data().data(), n, d);
  return PixelBatch(std::move(samples));
}

ImageTensor unflatten_batch(const PixelBatch& batch, int width, int height) {
  if (static_cast<Eigen::Index>(width) * height != batch.n_samples()) {
    throw InvalidInput("batch size does not match the requested image shape");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = batch.samples();
  std::vector<double> data(rm.data(), rm.data() + rm.size());
  return ImageTensor(width, height, static_cast<int>(batch.dim()), std::move(data));
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean_of(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace dcgn
