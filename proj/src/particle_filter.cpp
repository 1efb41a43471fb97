#include "gbps/particle_filter.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gbps/errors.hpp"
#include "gbps/log.hpp"
#include "gbps/static_posterior.hpp"

namespace gbps {

std::vector<double> ParticleCloud::weights() const {
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i]);
  return w;
}

namespace {

void check_cloud(const ParticleCloud& cloud) {
  if (cloud.particles.empty() || cloud.particles.size() != cloud.log_weights.size()) {
    fail_validation("validation", "particle cloud is empty or has mismatched weights");
  }
}

void check_evolution_config(const EvolutionConfig& config) {
  if (!(config.discount > 0.0) || config.discount > 1.0) {
    fail_validation("validation", "discount factor must lie in (0, 1]");
  }
  if (config.jitter < 0.0) fail_validation("validation", "jitter must be >= 0");
  if (!(config.resample_threshold > 0.0) || config.resample_threshold > 1.0) {
    fail_validation("validation", "resample threshold must lie in (0, 1]");
  }
}

void normalize_log_weights(std::vector<double>& log_weights, std::int64_t period) {
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) top = std::max(top, lw);
  if (!std::isfinite(top)) {
    fail_runtime("degenerate",
                 "all particle weights underflowed at period " + std::to_string(period));
  }
  double sum = 0.0;
  for (double lw : log_weights) sum += std::exp(lw - top);
  const double log_norm = top + std::log(sum);
  for (double& lw : log_weights) lw -= log_norm;
}

// Weighted covariance of the cloud in ambient coordinates.
Eigen::MatrixXd weighted_covariance(const ParticleCloud& cloud) {
  const auto j = static_cast<Eigen::Index>(cloud.experts());
  const std::vector<double> w = cloud.weights();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(j);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (Eigen::Index d = 0; d < j; ++d) mean(d) += w[i] * cloud.particles[i][static_cast<std::size_t>(d)];
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(j, j);
  Eigen::VectorXd centered(j);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (Eigen::Index d = 0; d < j; ++d) {
      centered(d) = cloud.particles[i][static_cast<std::size_t>(d)] - mean(d);
    }
    cov.noalias() += w[i] * centered * centered.transpose();
  }
  return cov;
}

}  // namespace

ParticleCloud init_particles(std::size_t num_experts, std::size_t num_particles,
                             std::span<const double> prior_alpha, Rng& rng) {
  if (num_experts < 1) fail_validation("validation", "need at least one expert");
  if (num_particles < 2) fail_validation("validation", "need at least two particles");
  if (prior_alpha.size() != num_experts) {
    fail_validation("dimension", "prior alpha has length " + std::to_string(prior_alpha.size()) +
                                     " but there are " + std::to_string(num_experts) + " experts");
  }
  ParticleCloud cloud;
  cloud.particles.reserve(num_particles);
  const std::uint64_t base = rng.stream_base();
  for (std::size_t i = 0; i < num_particles; ++i) {
    Rng stream(mix_seed(base, i));
    cloud.particles.push_back(sample_dirichlet(prior_alpha, stream));
  }
  cloud.log_weights.assign(num_particles, -std::log(static_cast<double>(num_particles)));
  cloud.period = 0;
  return cloud;
}

std::vector<std::vector<double>> evolve_ambient(const ParticleCloud& cloud,
                                                const EvolutionConfig& config, Rng& rng) {
  check_cloud(cloud);
  check_evolution_config(config);
  const std::size_t j = cloud.experts();

  Eigen::MatrixXd noise_cov =
      ((1.0 - config.discount) / config.discount) * weighted_covariance(cloud);
  for (std::size_t d = 0; d < j; ++d) {
    noise_cov(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) += config.jitter;
  }

  std::vector<std::vector<double>> out(cloud.size());
  if (noise_cov.lpNorm<Eigen::Infinity>() == 0.0) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      out[i].assign(cloud.particles[i].begin(), cloud.particles[i].end());
    }
    return out;
  }

  // PSD square root; the discounted covariance is rank-deficient on the
  // simplex (rows sum to zero), so a plain Cholesky would fail.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(noise_cov);
  Eigen::VectorXd scale = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd root = eig.eigenvectors() * scale.asDiagonal();

  const std::uint64_t base = rng.stream_base();
  Eigen::VectorXd draw(static_cast<Eigen::Index>(j));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Rng stream(mix_seed(base, i));
    for (std::size_t d = 0; d < j; ++d) draw(static_cast<Eigen::Index>(d)) = stream.normal();
    Eigen::VectorXd shift = root * draw;
    out[i].resize(j);
    for (std::size_t d = 0; d < j; ++d) {
      out[i][d] = cloud.particles[i][d] + shift(static_cast<Eigen::Index>(d));
    }
  }
  return out;
}

ParticleCloud evolve(ParticleCloud cloud, const EvolutionConfig& config, Rng& rng) {
  check_cloud(cloud);
  check_evolution_config(config);

  const bool frozen = config.discount == 1.0 && config.jitter == 0.0;
  cloud.degenerate_evolution = false;
  if (!frozen) {
    if (config.jitter == 0.0 && weighted_covariance(cloud).lpNorm<Eigen::Infinity>() == 0.0) {
      // Single distinct particle: W_t is exactly zero, the walk cannot move.
      cloud.degenerate_evolution = true;
      log::info("evolution covariance degenerated to zero at period " +
                std::to_string(cloud.period));
    } else {
      auto moved = evolve_ambient(cloud, config, rng);
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        cloud.particles[i] = project_to_simplex(moved[i]);
      }
    }
  }
  ++cloud.period;
  return cloud;
}

ParticleCloud reweight(ParticleCloud cloud, const PredictiveEnsemble& ensemble, double lambda) {
  check_cloud(cloud);
  if (ensemble.size() != cloud.experts()) {
    fail_validation("dimension", "ensemble has " + std::to_string(ensemble.size()) +
                                     " experts but particles have dimension " +
                                     std::to_string(cloud.experts()));
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cloud.log_weights[i] += ensemble_log_weight(cloud.particles[i], ensemble, lambda);
  }
  normalize_log_weights(cloud.log_weights, cloud.period);
  return cloud;
}

double effective_sample_size(const ParticleCloud& cloud) {
  check_cloud(cloud);
  double sum_sq = 0.0;
  for (double lw : cloud.log_weights) {
    const double w = std::exp(lw);
    sum_sq += w * w;
  }
  return 1.0 / sum_sq;
}

ParticleCloud resample(ParticleCloud cloud, Rng& rng) {
  check_cloud(cloud);
  const std::size_t n = cloud.size();
  const std::vector<double> w = cloud.weights();

  std::vector<SimplexWeights> resampled;
  resampled.reserve(n);
  const double offset = rng.uniform();
  double cumulative = w[0];
  std::size_t src = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double position = (static_cast<double>(i) + offset) / static_cast<double>(n);
    while (position > cumulative && src + 1 < n) cumulative += w[++src];
    resampled.push_back(cloud.particles[src]);
  }
  cloud.particles = std::move(resampled);
  cloud.log_weights.assign(n, -std::log(static_cast<double>(n)));
  return cloud;
}

SimplexWeights cloud_mean(const ParticleCloud& cloud) {
  check_cloud(cloud);
  std::vector<double> mean(cloud.experts(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double w = std::exp(cloud.log_weights[i]);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += w * cloud.particles[i][d];
  }
  return SimplexWeights(std::move(mean));
}

StepResult step(ParticleCloud cloud, const PredictiveEnsemble& ensemble,
                const EvolutionConfig& config, double lambda, Rng& rng) {
  check_evolution_config(config);
  cloud = reweight(std::move(cloud), ensemble, lambda);

  StepSummary summary{cloud_mean(cloud), effective_sample_size(cloud), false};
  if (summary.ess < config.resample_threshold * static_cast<double>(cloud.size())) {
    cloud = resample(std::move(cloud), rng);
    summary.resampled = true;
  }
  cloud = evolve(std::move(cloud), config, rng);
  return StepResult{std::move(cloud), std::move(summary)};
}

}  // namespace gbps
