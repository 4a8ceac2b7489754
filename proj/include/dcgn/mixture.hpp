#pragma once

#include "dcgn/core.hpp"

#include <functional>
#include <random>

namespace dcgn {

/// Range of the diagonal entries drawn for the initial covariances.
inline constexpr double kInitCovarianceLow = 0.05;
inline constexpr double kInitCovarianceHigh = 0.3;
inline constexpr double kEmTolerance = 1e-7;
inline constexpr double kDegenerateColumnMass = 1e-12;

/// N x K matrix of log(alpha_k) + log N(x_i; mu_k, Sigma_k), evaluated through a
/// Cholesky factor of each covariance. Throws NumericalError naming the
/// component whose covariance is not positive definite.
Matrix component_log_density(const PixelBatch& batch, const MixtureParams& params);

/// Expected complete-data log-likelihood of the mixture under responsibilities
/// gamma, including the entropy term and the (D/2) log 2pi constant.
double gmm_log_likelihood(const PixelBatch& batch, const PosteriorField& gamma,
                          const MixtureParams& params);

/// Sum over components and channels of |mu_kc - mean_c| / variance_c.
double centralised_penalty(const MixtureParams& params, const BatchStats& stats);

/// gmm_log_likelihood (divided by N under ObjectiveScale::PerSample) minus
/// lambda times centralised_penalty.
double constrained_objective(const PixelBatch& batch, const PosteriorField& gamma,
                             const MixtureParams& params, const BatchStats& stats,
                             double lambda, ObjectiveScale scale = ObjectiveScale::Sum);

/// alpha_k = sum_i gamma_ik / N.
Vector m_step_alpha(const PosteriorField& gamma);

struct CentringOptions {
  CentringSign sign = CentringSign::SelfConsistent;
  ObjectiveScale scale = ObjectiveScale::Sum;
};

/// Constrained mean update. Per channel c the responsibility-weighted mean is
/// corrected by lambda * Sigma_prev[k](c,c) / variance_c / sum_i gamma_ik towards
/// the observed mean (times N under ObjectiveScale::PerSample), then clamped
/// to [0,1]. mu_prev is only consulted by CentringSign::PreviousIterate.
Matrix m_step_mu_constrained(const PosteriorField& gamma, const PixelBatch& batch,
                             std::span<const Matrix> sigma_prev, const Matrix& mu_prev,
                             const BatchStats& stats, double lambda,
                             CentringOptions options = {});

/// Responsibility-weighted scatter around `means` plus covariance_floor * I.
std::vector<Matrix> m_step_sigma(const PosteriorField& gamma, const PixelBatch& batch,
                                 const Matrix& means, double covariance_floor = 1e-6);

/// Bayes responsibilities gamma_ik proportional to alpha_k N(x_i; mu_k, Sigma_k),
/// computed in log space and floored.
PosteriorField classical_posterior(const PixelBatch& batch, const MixtureParams& params,
                                   double gamma_floor = kDefaultGammaFloor);

/// K distinct batch rows as means, diagonal covariances with entries uniform in
/// [kInitCovarianceLow, kInitCovarianceHigh], uniform weights.
MixtureParams initialize_mixture(const PixelBatch& batch, int k, std::mt19937_64& rng);

/// Random diagonal covariances as used for the initial iterate.
std::vector<Matrix> random_diagonal_covariances(int k, Eigen::Index dim, std::mt19937_64& rng);

struct EmResult {
  MixtureParams params;
  PosteriorField posterior;  // E-step under the final parameters
  std::vector<double> trace;  // constrained objective after each iteration
  int iterations = 0;
  bool converged = false;
};

/// Called after each iteration with the updated parameters and the
/// responsibilities that produced them.
using EmObserver =
    std::function<void(int iteration, const MixtureParams&, const PosteriorField&)>;

/// Closed-form alternation of classical_posterior with the constrained M-step,
/// stopping when the objective changes by less than kEmTolerance or after
/// config.epochs iterations.
EmResult fit_constrained_em(const PixelBatch& batch, const RunConfig& config,
                            const EmObserver& observer = {});

}  // namespace dcgn
