#include "dcgn/network.hpp"

#include "dcgn/preprocess.hpp"

#include <chrono>
#include <numeric>

namespace dcgn {

namespace {

struct ForwardCache {
  std::vector<Matrix> activations;  // input, then each hidden tanh output
  Matrix probabilities;             // softmax before the floor
  PosteriorField gamma;
};

ForwardCache run_forward(const NetworkParams& params, const Matrix& x, double gamma_floor) {
  if (params.layers.empty()) throw InvalidInput("network has no layers");
  if (x.cols() != params.input_dim()) {
    throw InvalidInput("batch dimension " + std::to_string(x.cols()) +
                       " does not match network input " + std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.activations.reserve(params.layers.size());
  cache.activations.push_back(x);
  for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    Matrix a = cache.activations.back() * layer.weights.transpose();
    a.rowwise() += layer.bias.transpose();
    cache.activations.push_back(a.array().tanh().matrix());
  }
  const DenseLayer& out = params.layers.back();
  Matrix logits = cache.activations.back() * out.weights.transpose();
  logits.rowwise() += out.bias.transpose();

  cache.probabilities = softmax_rows(logits, 0.0).gamma;
  cache.gamma = softmax_rows(logits, gamma_floor);
  return cache;
}

// Exact backward pass of sum_ik gamma_ik (l_ik - log gamma_ik), scaled by
// `sign`, through the floor, the renormalisation and the softmax.
NetworkParams run_backward(const NetworkParams& params, const ForwardCache& cache,
                           const Matrix& log_density, double gamma_floor, double sign) {
  const Matrix& g = cache.gamma.gamma;
  const Matrix& p = cache.probabilities;
  const auto n = g.rows();

  const Matrix d_gamma = (log_density.array() - g.array().log() - 1.0).matrix();
  Matrix d_logits(n, g.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    // gamma = q / sum(q) with q = max(p, floor); sum(q) is recovered from any
    // unclamped entry as q_j / gamma_j.
    double q_sum = 0.0;
    for (Eigen::Index j = 0; j < g.cols(); ++j) q_sum += std::max(p(i, j), gamma_floor);
    const double inner = g.row(i).dot(d_gamma.row(i));
    RowVector d_p(g.cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      const double d_q = (d_gamma(i, j) - inner) / q_sum;
      d_p(j) = p(i, j) >= gamma_floor ? d_q : 0.0;
    }
    const double centre = p.row(i).dot(d_p);
    d_logits.row(i) = (p.row(i).array() * (d_p.array() - centre)).matrix();
  }
  d_logits *= sign;

  NetworkParams grad = params.zeros_like();
  Matrix delta = std::move(d_logits);
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Matrix& input = cache.activations[l];
    grad.layers[l].weights = delta.transpose() * input;
    grad.layers[l].bias = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix back = delta * params.layers[l].weights;
    delta = (back.array() * (1.0 - input.array().square())).matrix();
  }
  return grad;
}

double likelihood_scale(ObjectiveScale scale, Eigen::Index n) {
  return scale == ObjectiveScale::PerSample ? 1.0 / static_cast<double>(n) : 1.0;
}

void add_scaled(NetworkParams& target, const NetworkParams& step, double factor) {
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    target.layers[l].weights += factor * step.layers[l].weights;
    target.layers[l].bias += factor * step.layers[l].bias;
  }
}

Matrix pool_pixels(std::span<const ImageTensor> images) {
  Eigen::Index total = 0;
  for (const auto& img : images) total += static_cast<Eigen::Index>(img.pixel_count());
  const auto d = static_cast<Eigen::Index>(images.front().channels());
  Matrix pooled(total, d);
  Eigen::Index row = 0;
  for (const auto& img : images) {
    if (img.channels() != d) throw InvalidInput("dataset images differ in channel count");
    const PixelBatch b = flatten_image(img);
    pooled.middleRows(row, b.n_samples()) = b.samples();
    row += b.n_samples();
  }
  return pooled;
}

}  // namespace

std::vector<int> NetworkParams::widths() const {
  std::vector<int> out;
  if (layers.empty()) return out;
  out.push_back(input_dim());
  for (const auto& layer : layers) out.push_back(static_cast<int>(layer.weights.rows()));
  return out;
}

bool NetworkParams::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

NetworkParams NetworkParams::zeros_like() const {
  NetworkParams out;
  for (const auto& layer : layers) {
    out.layers.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                          Vector::Zero(layer.bias.size())});
  }
  return out;
}

NetworkParams init_network(int input_dim, std::span<const int> hidden, int k,
                           std::mt19937_64& rng) {
  if (input_dim < 1 || k < 1) throw InvalidInput("network dimensions must be positive");
  std::vector<int> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(k);

  NetworkParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    if (fan_out < 1) throw InvalidInput("hidden widths must be positive");
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = dist(rng);
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

NetworkParams init_network(int input_dim, int k, std::mt19937_64& rng) {
  const int hidden[] = {kHiddenWidth, kHiddenWidth};
  return init_network(input_dim, hidden, k, rng);
}

Matrix network_logits(const NetworkParams& params, const PixelBatch& batch) {
  const ForwardCache cache = run_forward(params, batch.samples(), kDefaultGammaFloor);
  const DenseLayer& out = params.layers.back();
  Matrix logits = cache.activations.back() * out.weights.transpose();
  logits.rowwise() += out.bias.transpose();
  return logits;
}

PosteriorField forward(const NetworkParams& params, const PixelBatch& batch, double gamma_floor) {
  return run_forward(params, batch.samples(), gamma_floor).gamma;
}

LossAndGrad loss_and_grad(const NetworkParams& params, const PixelBatch& batch,
                          const MixtureParams& frozen, const BatchStats& stats, double lambda,
                          double gamma_floor, ObjectiveScale scale) {
  if (frozen.k() != params.output_dim()) {
    throw InvalidInput("network output width does not match mixture K");
  }
  const ForwardCache cache = run_forward(params, batch.samples(), gamma_floor);
  const Matrix log_density = component_log_density(batch, frozen);
  const double s = likelihood_scale(scale, batch.n_samples());

  LossAndGrad out;
  out.loss = -constrained_objective(batch, cache.gamma, frozen, stats, lambda, scale);
  out.grad = run_backward(params, cache, log_density, gamma_floor, -s);
  return out;
}

bool TrainTrace::same_trajectory(const TrainTrace& other) const {
  if (entries.size() != other.entries.size()) return false;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& a = entries[i];
    const auto& b = other.entries[i];
    if (a.epoch != b.epoch || a.objective != b.objective || a.learning_rate != b.learning_rate) {
      return false;
    }
  }
  return true;
}

int epochs_to_convergence(const TrainTrace& trace, double tolerance, int window) {
  const auto& e = trace.entries;
  int run = 0;
  for (std::size_t i = 1; i < e.size(); ++i) {
    run = std::abs(e[i].objective - e[i - 1].objective) < tolerance ? run + 1 : 0;
    if (run >= window) return static_cast<int>(i) + 1 - window;
  }
  return static_cast<int>(e.size());
}

TrainResult train_dcgn(std::span<const ImageTensor> dataset, const RunConfig& config) {
  config.validate();
  if (dataset.empty()) throw InvalidInput("training dataset is empty");
  for (const auto& img : dataset) img.require_unit_range("train_dcgn");

  std::mt19937_64 rng(config.seed);
  const int d = dataset.front().channels();
  TrainResult result;
  result.network = init_network(d, config.k, rng);
  result.mixture.covariances = random_diagonal_covariances(config.k, d, rng);

  const CentringOptions centring{config.centring, config.objective_scale};
  Matrix pixels = pool_pixels(dataset);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(pixels.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  double lr = config.learning_rate;
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.augment) {
      std::vector<ImageTensor> augmented;
      augmented.reserve(dataset.size());
      for (const auto& img : dataset) augmented.push_back(augment(img, rng()));
      pixels = pool_pixels(augmented);
    }
    std::shuffle(order.begin(), order.end(), rng);

    double objective_sum = 0.0;
    int batches = 0;
    const auto n = static_cast<Eigen::Index>(order.size());
    for (Eigen::Index begin = 0; begin < n; begin += config.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, n - begin);
      Matrix rows(size, d);
      for (Eigen::Index r = 0; r < size; ++r) {
        rows.row(r) = pixels.row(order[static_cast<std::size_t>(begin + r)]);
      }
      const PixelBatch batch(std::move(rows));
      const BatchStats stats = compute_batch_stats(batch, config.variance_floor);
      const ForwardCache cache = run_forward(result.network, batch.samples(), config.gamma_floor);
      const PosteriorField& gamma = cache.gamma;

      const Matrix mu_prev =
          result.mixture.means.size() > 0
              ? result.mixture.means
              : Matrix((gamma.gamma.transpose() * batch.samples()).array().colwise() /
                       gamma.gamma.colwise().sum().transpose().array());
      MixtureParams next;
      next.means = m_step_mu_constrained(gamma, batch, result.mixture.covariances, mu_prev, stats,
                                         config.lambda, centring);
      next.weights = m_step_alpha(gamma);
      next.covariances = m_step_sigma(gamma, batch, next.means, config.covariance_floor);
      result.mixture = std::move(next);

      const double objective = constrained_objective(batch, gamma, result.mixture, stats,
                                                     config.lambda, config.objective_scale);
      if (!std::isfinite(objective)) {
        throw NumericalError("non-finite objective at epoch " + std::to_string(epoch));
      }
      const Matrix log_density = component_log_density(batch, result.mixture);
      const NetworkParams grad =
          run_backward(result.network, cache, log_density, config.gamma_floor,
                       -likelihood_scale(config.objective_scale, batch.n_samples()));
      add_scaled(result.network, grad, -lr);
      if (!result.network.all_finite()) {
        throw NumericalError("network parameters became non-finite at epoch " +
                             std::to_string(epoch));
      }
      objective_sum += objective;
      ++batches;
    }

    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.trace.entries.push_back({epoch, objective_sum / batches, lr, elapsed});
    lr *= config.lr_decay;
  }
  return result;
}

SegmentationMask predict(const NetworkParams& params, const ImageTensor& img) {
  const PosteriorField gamma = forward(params, flatten_image(img));
  return SegmentationMask{img.width(), img.height(), argmax_rows(gamma.gamma)};
}

}  // namespace dcgn
