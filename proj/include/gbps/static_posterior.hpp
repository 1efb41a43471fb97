#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gbps/predictive.hpp"
#include "gbps/rng.hpp"
#include "gbps/simplex.hpp"

namespace gbps {

/// Closed form of log integral exp(-lambda <theta, z>) prod_j N(z_j; m_j, s_j^2) dz,
/// via the Gaussian moment generating function:
///   sum_j ( -lambda theta_j m_j + lambda^2 theta_j^2 s_j^2 / 2 ).
/// Requires an all-Gaussian ensemble.
double analytic_log_weight(const SimplexWeights& theta, const PredictiveEnsemble& ensemble,
                           double lambda);

/// Exact log weight for any ensemble, using the factorization over
/// independent experts: sum_j log E[exp(-lambda theta_j Z_j)]. Matches
/// analytic_log_weight on all-Gaussian ensembles and evaluates empirical
/// experts by exact log-mean-exp over their atoms.
double ensemble_log_weight(const SimplexWeights& theta, const PredictiveEnsemble& ensemble,
                           double lambda);

struct McLogWeight {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of the same integral: log-mean-exp of
/// -lambda <theta, z_i> over n_draws joint draws z_i from prod_j h_j,
/// max-subtracted for stability. The standard error comes from the delta
/// method on the untransformed mean. Needs n_draws >= 100.
McLogWeight mc_log_weight(const SimplexWeights& theta, const PredictiveEnsemble& ensemble,
                          int n_draws, double lambda, Rng& rng);

struct PosteriorOptions {
  int n_samples = 5000;
  int burn_in = 2000;
  double lambda = 1.0;
  /// Initial concentration of the Dirichlet random-walk proposal; adapted
  /// during burn-in toward 20-40% acceptance, frozen afterwards.
  double initial_concentration = 50.0;
  /// Probability of proposing an independent Dirichlet(1) draw instead of a
  /// local move; decorrelates the chain on diffuse targets.
  double independence_mix = 0.1;
};

struct PosteriorSample {
  std::vector<SimplexWeights> draws;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  /// Set when acceptance ended below 1%; the chain barely moved and the
  /// draws should not be trusted.
  bool degenerate_chain = false;
};

/// Metropolis-Hastings on the simplex targeting
///   exp(log_weight(theta)) * Dirichlet(theta; prior_alpha),
/// with a Dirichlet proposal centered at the current point. The kernel is
/// the exact ensemble_log_weight, so Gaussian and empirical experts are
/// handled without inner Monte Carlo noise.
PosteriorSample sample_posterior(const PredictiveEnsemble& ensemble,
                                 std::span<const double> prior_alpha,
                                 const PosteriorOptions& options, std::uint64_t seed);

/// Component-wise average of the draws, renormalized within tolerance.
SimplexWeights posterior_mean(const PosteriorSample& sample);

/// Component-wise standard deviation of the draws (population form).
std::vector<double> posterior_stddev(const PosteriorSample& sample);

}  // namespace gbps
