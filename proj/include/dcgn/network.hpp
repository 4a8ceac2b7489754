#pragma once

#include "dcgn/mixture.hpp"

#include <random>

namespace dcgn {

inline constexpr int kHiddenWidth = 32;
inline constexpr double kConvergenceTolerance = 1e-4;
inline constexpr int kConvergenceWindow = 5;

/// Fully connected layer: y = W x + b with W stored out x in.
struct DenseLayer {
  Matrix weights;
  Vector bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights == b.weights && a.bias == b.bias;
  }
};

/// Per-pixel posterior network: tanh hidden layers, softmax output.
struct NetworkParams {
  std::vector<DenseLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weights.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weights.rows()); }
  /// Layer widths from input to output, e.g. {3, 32, 32, 3}.
  std::vector<int> widths() const;
  bool all_finite() const;

  /// Same shape, all parameters zero.
  NetworkParams zeros_like() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Glorot-uniform weights, zero biases.
NetworkParams init_network(int input_dim, std::span<const int> hidden, int k, std::mt19937_64& rng);

/// D -> 32 -> 32 -> K.
NetworkParams init_network(int input_dim, int k, std::mt19937_64& rng);

/// Pre-softmax outputs, N x K.
Matrix network_logits(const NetworkParams& params, const PixelBatch& batch);

PosteriorField forward(const NetworkParams& params, const PixelBatch& batch,
                       double gamma_floor = kDefaultGammaFloor);

struct LossAndGrad {
  double loss = 0.0;
  NetworkParams grad;
};

/// Loss is the negated constrained objective of forward(params, batch) with the
/// mixture held fixed; grad is its exact derivative w.r.t. every weight and bias,
/// including through the responsibility floor.
LossAndGrad loss_and_grad(const NetworkParams& params, const PixelBatch& batch,
                          const MixtureParams& frozen, const BatchStats& stats, double lambda,
                          double gamma_floor = kDefaultGammaFloor,
                          ObjectiveScale scale = ObjectiveScale::Sum);

struct TraceEntry {
  int epoch = 0;
  double objective = 0.0;  // mean constrained objective over the epoch's minibatches
  double learning_rate = 0.0;
  double wall_ms = 0.0;
};

struct TrainTrace {
  std::vector<TraceEntry> entries;

  /// Compares epochs, objectives and learning rates bit-for-bit; wall time is
  /// not part of the comparison.
  bool same_trajectory(const TrainTrace& other) const;
};

/// First epoch (1-based) from which |objective change| stays below tolerance
/// for `window` consecutive epochs; the trace length if that never happens.
int epochs_to_convergence(const TrainTrace& trace, double tolerance = kConvergenceTolerance,
                          int window = kConvergenceWindow);

struct TrainResult {
  NetworkParams network;
  MixtureParams mixture;
  TrainTrace trace;
};

/// Alternates a closed-form constrained update of the mixture from the
/// network's responsibilities with a gradient step on the network, over
/// seeded random pixel minibatches. Images must already be min-max normalised.
TrainResult train_dcgn(std::span<const ImageTensor> dataset, const RunConfig& config);

/// Per-pixel argmax of the network posterior, ties to the lowest class.
SegmentationMask predict(const NetworkParams& params, const ImageTensor& img);

}  // namespace dcgn
