#include "dcgn/mixture.hpp"

#include <numbers>
#include <numeric>

namespace dcgn {

namespace {

void check_shapes(const PixelBatch& batch, const PosteriorField& gamma) {
  if (gamma.n_samples() != batch.n_samples()) {
    throw InvalidInput("posterior has " + std::to_string(gamma.n_samples()) +
                       " rows but the batch has " + std::to_string(batch.n_samples()));
  }
}

void check_shapes(const PixelBatch& batch, const MixtureParams& params) {
  if (params.dim() != batch.dim()) {
    throw InvalidInput("mixture dimension does not match the batch dimension");
  }
  if (params.weights.size() != params.k() ||
      static_cast<Eigen::Index>(params.covariances.size()) != params.k()) {
    throw InvalidInput("mixture parameters have inconsistent component counts");
  }
}

Vector column_mass(const PosteriorField& gamma) {
  Vector mass = gamma.gamma.colwise().sum().transpose();
  for (Eigen::Index k = 0; k < mass.size(); ++k) {
    if (mass(k) < kDegenerateColumnMass) {
      throw NumericalError("degenerate responsibility column " + std::to_string(k));
    }
  }
  return mass;
}

}  // namespace

Matrix component_log_density(const PixelBatch& batch, const MixtureParams& params) {
  check_shapes(batch, params);
  const Matrix& x = batch.samples();
  const auto n = x.rows();
  const auto d = x.cols();
  const double log_norm = 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);

  Matrix out(n, params.k());
  for (Eigen::Index k = 0; k < params.k(); ++k) {
    const Matrix& sigma = params.covariances[static_cast<std::size_t>(k)];
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("covariance of component " + std::to_string(k) +
                           " is not positive definite");
    }
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    Matrix centred = (x.rowwise() - params.means.row(k)).transpose();
    llt.matrixL().solveInPlace(centred);
    const RowVector mahalanobis = centred.colwise().squaredNorm();
    out.col(k) = (std::log(params.weights(k)) - log_norm - 0.5 * log_det -
                  0.5 * mahalanobis.array())
                     .transpose();
  }
  return out;
}

double gmm_log_likelihood(const PixelBatch& batch, const PosteriorField& gamma,
                          const MixtureParams& params) {
  check_shapes(batch, gamma);
  if (gamma.k() != params.k()) throw InvalidInput("posterior K does not match mixture K");
  const Matrix log_density = component_log_density(batch, params);
  const Matrix& g = gamma.gamma;
  return (g.array() * (log_density.array() - g.array().log())).sum();
}

double centralised_penalty(const MixtureParams& params, const BatchStats& stats) {
  if (params.dim() != stats.mean.size()) {
    throw InvalidInput("mixture dimension does not match the batch statistics");
  }
  const Matrix deviation = params.means.rowwise() - stats.mean.transpose();
  return (deviation.cwiseAbs().array().rowwise() / stats.variance.transpose().array()).sum();
}

double constrained_objective(const PixelBatch& batch, const PosteriorField& gamma,
                             const MixtureParams& params, const BatchStats& stats,
                             double lambda, ObjectiveScale scale) {
  double likelihood = gmm_log_likelihood(batch, gamma, params);
  if (scale == ObjectiveScale::PerSample) likelihood /= static_cast<double>(batch.n_samples());
  return likelihood - lambda * centralised_penalty(params, stats);
}

Vector m_step_alpha(const PosteriorField& gamma) {
  Vector alpha = gamma.gamma.colwise().sum().transpose();
  return alpha / static_cast<double>(gamma.n_samples());
}

Matrix m_step_mu_constrained(const PosteriorField& gamma, const PixelBatch& batch,
                             std::span<const Matrix> sigma_prev, const Matrix& mu_prev,
                             const BatchStats& stats, double lambda,
                             CentringOptions options) {
  check_shapes(batch, gamma);
  const auto kk = gamma.k();
  const auto d = batch.dim();
  if (static_cast<Eigen::Index>(sigma_prev.size()) != kk) {
    throw InvalidInput("previous covariances do not match K");
  }
  if (options.sign == CentringSign::PreviousIterate && (mu_prev.rows() != kk || mu_prev.cols() != d)) {
    throw InvalidInput("previous means do not match K x D");
  }

  const Vector mass = column_mass(gamma);
  const Matrix weighted_sum = gamma.gamma.transpose() * batch.samples();
  const double scale =
      options.scale == ObjectiveScale::PerSample ? static_cast<double>(batch.n_samples()) : 1.0;

  Matrix mu(kk, d);
  for (Eigen::Index k = 0; k < kk; ++k) {
    const Matrix& sigma = sigma_prev[static_cast<std::size_t>(k)];
    for (Eigen::Index c = 0; c < d; ++c) {
      const double candidate = weighted_sum(k, c) / mass(k);
      const double correction =
          lambda * scale * sigma(c, c) / stats.variance(c) / mass(k);
      const double centre = stats.mean(c);
      double value = candidate;
      if (options.sign == CentringSign::SelfConsistent) {
        const double offset = candidate - centre;
        const double shrunk = std::max(std::abs(offset) - correction, 0.0);
        value = centre + std::copysign(shrunk, offset);
      } else {
        value = mu_prev(k, c) >= centre ? candidate - correction : candidate + correction;
      }
      mu(k, c) = std::clamp(value, 0.0, 1.0);
    }
  }
  return mu;
}

std::vector<Matrix> m_step_sigma(const PosteriorField& gamma, const PixelBatch& batch,
                                 const Matrix& means, double covariance_floor) {
  check_shapes(batch, gamma);
  if (means.rows() != gamma.k() || means.cols() != batch.dim()) {
    throw InvalidInput("means do not match K x D");
  }
  const Vector mass = column_mass(gamma);
  std::vector<Matrix> sigma;
  sigma.reserve(static_cast<std::size_t>(gamma.k()));
  for (Eigen::Index k = 0; k < gamma.k(); ++k) {
    const Matrix centred = batch.samples().rowwise() - means.row(k);
    Matrix s = centred.transpose() * gamma.gamma.col(k).asDiagonal() * centred;
    s /= mass(k);
    s = 0.5 * (s + s.transpose()).eval();
    s.diagonal().array() += covariance_floor;
    sigma.push_back(std::move(s));
  }
  return sigma;
}

PosteriorField classical_posterior(const PixelBatch& batch, const MixtureParams& params,
                                   double gamma_floor) {
  return softmax_rows(component_log_density(batch, params), gamma_floor);
}

std::vector<Matrix> random_diagonal_covariances(int k, Eigen::Index dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> diag(kInitCovarianceLow, kInitCovarianceHigh);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    Matrix s = Matrix::Zero(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) s(j, j) = diag(rng);
    out.push_back(std::move(s));
  }
  return out;
}

MixtureParams initialize_mixture(const PixelBatch& batch, int k, std::mt19937_64& rng) {
  const auto n = batch.n_samples();
  if (k < 1) throw InvalidInput("k must be positive");
  if (n < k) throw InvalidInput("need at least K samples to initialise K components");

  // Partial Fisher-Yates over the row indices.
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  MixtureParams params;
  params.means.resize(k, batch.dim());
  for (int c = 0; c < k; ++c) {
    std::uniform_int_distribution<Eigen::Index> pick(c, n - 1);
    std::swap(rows[static_cast<std::size_t>(c)], rows[static_cast<std::size_t>(pick(rng))]);
    params.means.row(c) = batch.samples().row(rows[static_cast<std::size_t>(c)]);
  }
  params.covariances = random_diagonal_covariances(k, batch.dim(), rng);
  params.weights = Vector::Constant(k, 1.0 / k);
  return params;
}

EmResult fit_constrained_em(const PixelBatch& batch, const RunConfig& config,
                            const EmObserver& observer) {
  config.validate();
  if (batch.n_samples() < config.k) {
    throw InvalidInput("constrained EM needs N >= K samples");
  }
  std::mt19937_64 rng(config.seed);
  const BatchStats stats = compute_batch_stats(batch, config.variance_floor);
  const CentringOptions centring{config.centring, config.objective_scale};

  EmResult result;
  result.params = initialize_mixture(batch, config.k, rng);
  double previous = 0.0;
  for (int it = 0; it < config.epochs; ++it) {
    const PosteriorField gamma = classical_posterior(batch, result.params, config.gamma_floor);

    MixtureParams next;
    next.means = m_step_mu_constrained(gamma, batch, result.params.covariances,
                                       result.params.means, stats, config.lambda, centring);
    next.weights = m_step_alpha(gamma);
    next.covariances = m_step_sigma(gamma, batch, next.means, config.covariance_floor);
    result.params = std::move(next);

    const double objective = constrained_objective(batch, gamma, result.params, stats,
                                                   config.lambda, config.objective_scale);
    result.trace.push_back(objective);
    result.iterations = it + 1;
    if (observer) observer(it, result.params, gamma);

    if (it > 0 && std::abs(objective - previous) < kEmTolerance) {
      result.converged = true;
      break;
    }
    previous = objective;
  }
  result.posterior = classical_posterior(batch, result.params, config.gamma_floor);
  return result;
}

}  // namespace dcgn
