#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gbps/predictive.hpp"
#include "gbps/rng.hpp"
#include "gbps/simplex.hpp"

namespace gbps {

/// State-evolution settings for the sequential posterior.
struct EvolutionConfig {
  /// Discount factor e in (0, 1]: evolution covariance is
  /// W_t = ((1 - e)/e) * C_t + jitter * I with C_t the weighted particle
  /// covariance. e = 1 freezes the coefficients.
  double discount = 0.95;
  /// Diagonal floor on W_t. Keeps the cloud responsive after it has
  /// concentrated at a simplex vertex; without it the covariance-proportional
  /// noise collapses with the cloud and the filter stops adapting.
  double jitter = 0.01;
  /// Resample when ESS < resample_threshold * N.
  double resample_threshold = 0.5;
};

/// Weighted particle approximation of the period-t posterior over ensemble
/// weights. log_weights are kept normalized: logsumexp(log_weights) == 0.
struct ParticleCloud {
  std::vector<SimplexWeights> particles;
  std::vector<double> log_weights;
  std::int64_t period = 0;
  /// Set by evolve() when the evolution covariance degenerated to zero with
  /// discount < 1 and no jitter (single distinct particle).
  bool degenerate_evolution = false;

  std::size_t size() const noexcept { return particles.size(); }
  std::size_t experts() const noexcept { return particles.empty() ? 0 : particles.front().size(); }

  /// Normalized weights exp(log_weights).
  std::vector<double> weights() const;
};

/// N i.i.d. Dirichlet(prior_alpha) particles with uniform weights at t = 0.
ParticleCloud init_particles(std::size_t num_experts, std::size_t num_particles,
                             std::span<const double> prior_alpha, Rng& rng);

/// Random-walk evolution: each particle gets an independent N(0, W_t)
/// increment and is projected back onto the simplex. Weights are unchanged;
/// the period advances. Per-particle noise comes from counter-derived child
/// streams, so the result is reproducible under any evaluation order.
ParticleCloud evolve(ParticleCloud cloud, const EvolutionConfig& config, Rng& rng);

/// The evolution increment without the simplex projection, in ambient
/// coordinates. Used by tests to measure the pre-projection covariance
/// growth; evolve() is this followed by projection.
std::vector<std::vector<double>> evolve_ambient(const ParticleCloud& cloud,
                                                const EvolutionConfig& config, Rng& rng);

/// Multiplies each particle's weight by the period kernel
/// exp(log_weight(theta_i)) and renormalizes (max-subtracted). Gaussian
/// experts use the closed-form kernel; empirical experts the exact
/// log-mean-exp over their atoms.
ParticleCloud reweight(ParticleCloud cloud, const PredictiveEnsemble& ensemble, double lambda);

/// 1 / sum_i w_i^2 on normalized weights.
double effective_sample_size(const ParticleCloud& cloud);

/// Systematic resampling; weights reset to uniform. Expected copy count of
/// particle i is N * w_i within the +-1 systematic guarantee.
ParticleCloud resample(ParticleCloud cloud, Rng& rng);

/// Weighted posterior mean of the cloud.
SimplexWeights cloud_mean(const ParticleCloud& cloud);

struct StepSummary {
  SimplexWeights posterior_mean;  // filtering mean used for period-t decisions
  double ess = 0.0;               // after reweighting, before any resample
  bool resampled = false;
};

struct StepResult {
  ParticleCloud cloud;  // evolved, ready for period t+1
  StepSummary summary;
};

/// One filtering period: reweight with the period ensemble, summarize the
/// filtering distribution, resample if ESS fell below threshold, evolve.
StepResult step(ParticleCloud cloud, const PredictiveEnsemble& ensemble,
                const EvolutionConfig& config, double lambda, Rng& rng);

}  // namespace gbps
