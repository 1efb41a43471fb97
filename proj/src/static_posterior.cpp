#include "gbps/static_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gbps/errors.hpp"
#include "gbps/log.hpp"
#include "gbps/detail/text.hpp"

namespace gbps {

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    fail_validation("validation", "loss temperature lambda must be positive and finite");
  }
}

double log_dirichlet_density(std::span<const double> x, std::span<const double> alpha) {
  // Unnormalized is enough for Metropolis ratios of a fixed prior, but the
  // proposal density needs the full normalizer because its parameters move.
  double lg_sum = 0.0;
  double alpha_sum = 0.0;
  double core = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lg_sum += std::lgamma(alpha[i]);
    alpha_sum += alpha[i];
    core += (alpha[i] - 1.0) * std::log(std::max(x[i], 1e-300));
  }
  return std::lgamma(alpha_sum) - lg_sum + core;
}

}  // namespace

double analytic_log_weight(const SimplexWeights& theta, const PredictiveEnsemble& ensemble,
                           double lambda) {
  check_lambda(lambda);
  if (!ensemble.all_gaussian()) {
    fail_validation("validation", "analytic kernel requires an all-Gaussian ensemble");
  }
  return ensemble_log_weight(theta, ensemble, lambda);
}

double ensemble_log_weight(const SimplexWeights& theta, const PredictiveEnsemble& ensemble,
                           double lambda) {
  check_lambda(lambda);
  if (theta.size() != ensemble.size()) {
    fail_validation("dimension", "weights cover " + std::to_string(theta.size()) +
                                     " experts but the ensemble has " +
                                     std::to_string(ensemble.size()));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    total += ensemble.expert(j).log_mgf(-lambda * theta[j]);
  }
  return total;
}

McLogWeight mc_log_weight(const SimplexWeights& theta, const PredictiveEnsemble& ensemble,
                          int n_draws, double lambda, Rng& rng) {
  check_lambda(lambda);
  if (n_draws < 100) {
    fail_validation("validation", "mc_log_weight needs n_draws >= 100, got " + std::to_string(n_draws));
  }
  if (theta.size() != ensemble.size()) {
    fail_validation("dimension", "weights cover " + std::to_string(theta.size()) +
                                     " experts but the ensemble has " +
                                     std::to_string(ensemble.size()));
  }
  const auto n = static_cast<std::size_t>(n_draws);
  std::vector<double> exponents(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < ensemble.size(); ++j) dot += theta[j] * ensemble.expert(j).draw(rng);
    exponents[i] = -lambda * dot;
  }
  const double top = *std::max_element(exponents.begin(), exponents.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double g : exponents) {
    const double u = std::exp(g - top);
    sum += u;
    sum_sq += u * u;
  }
  const double mean_u = sum / static_cast<double>(n);
  const double var_u = std::max(0.0, (sum_sq - static_cast<double>(n) * mean_u * mean_u) /
                                         static_cast<double>(n - 1));
  McLogWeight out;
  out.estimate = top + std::log(mean_u);
  out.std_error = std::sqrt(var_u / static_cast<double>(n)) / mean_u;
  return out;
}

PosteriorSample sample_posterior(const PredictiveEnsemble& ensemble,
                                 std::span<const double> prior_alpha,
                                 const PosteriorOptions& options, std::uint64_t seed) {
  const std::size_t j_experts = ensemble.size();
  if (prior_alpha.size() != j_experts) {
    fail_validation("dimension", "prior alpha has length " + std::to_string(prior_alpha.size()) +
                                     " but the ensemble has " + std::to_string(j_experts) +
                                     " experts");
  }
  for (double a : prior_alpha) {
    if (!(a > 0.0)) fail_validation("validation", "prior alpha entries must be positive");
  }
  if (options.n_samples < 1 || options.burn_in < 0) {
    fail_validation("validation", "need n_samples >= 1 and burn_in >= 0");
  }
  check_lambda(options.lambda);

  PosteriorSample result;
  result.seed = seed;
  result.draws.reserve(static_cast<std::size_t>(options.n_samples));

  if (j_experts == 1) {  // the 1-simplex is a single point
    result.draws.assign(static_cast<std::size_t>(options.n_samples), SimplexWeights::uniform(1));
    result.acceptance_rate = 1.0;
    return result;
  }

  Rng rng(seed);
  constexpr double kShapeFloor = 0.1;  // keeps proposal shapes valid near the boundary

  const auto log_target = [&](const SimplexWeights& theta) {
    double lp = ensemble_log_weight(theta, ensemble, options.lambda);
    for (std::size_t j = 0; j < j_experts; ++j) {
      lp += (prior_alpha[j] - 1.0) * std::log(std::max(theta[j], 1e-300));
    }
    return lp;
  };

  const std::vector<double> ind_alpha(j_experts, 1.0);
  double kappa = options.initial_concentration;
  const double mix = std::clamp(options.independence_mix, 0.0, 1.0);

  // log q(dst | src) for the mixture proposal.
  const auto log_proposal = [&](const SimplexWeights& dst, const SimplexWeights& src) {
    std::vector<double> shape(j_experts);
    for (std::size_t j = 0; j < j_experts; ++j) shape[j] = kappa * src[j] + kShapeFloor;
    const double local = log_dirichlet_density(dst.values(), shape);
    if (mix <= 0.0) return local;
    const double indep = log_dirichlet_density(dst.values(), ind_alpha);
    const double top = std::max(local + std::log1p(-mix), indep + std::log(mix));
    return top + std::log(std::exp(local + std::log1p(-mix) - top) +
                          std::exp(indep + std::log(mix) - top));
  };

  const auto propose = [&](const SimplexWeights& src) {
    if (mix > 0.0 && rng.uniform() < mix) return sample_dirichlet(ind_alpha, rng);
    std::vector<double> shape(j_experts);
    for (std::size_t j = 0; j < j_experts; ++j) shape[j] = kappa * src[j] + kShapeFloor;
    return sample_dirichlet(shape, rng);
  };

  SimplexWeights current = SimplexWeights::uniform(j_experts);
  double current_lp = log_target(current);

  const int total = options.burn_in + options.n_samples;
  long accepted = 0;
  long window_accepted = 0;
  int window_size = 0;

  for (int it = 0; it < total; ++it) {
    const SimplexWeights proposal = propose(current);
    const double proposal_lp = log_target(proposal);
    const double log_ratio = proposal_lp - current_lp + log_proposal(current, proposal) -
                             log_proposal(proposal, current);
    ++window_size;
    if (std::log(std::max(rng.uniform(), 1e-300)) < log_ratio) {
      current = proposal;
      current_lp = proposal_lp;
      ++accepted;
      ++window_accepted;
    }
    if (it < options.burn_in && window_size == 100) {
      const double rate = static_cast<double>(window_accepted) / window_size;
      if (rate < 0.2) {
        kappa = std::min(kappa * 1.6, 1e6);  // tighter proposals
      } else if (rate > 0.4) {
        kappa = std::max(kappa / 1.6, 1.0);  // bolder proposals
      }
      window_accepted = 0;
      window_size = 0;
    }
    if (it >= options.burn_in) result.draws.push_back(current);
  }

  result.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total);
  if (result.acceptance_rate < 0.01) {
    result.degenerate_chain = true;
    log::info("posterior chain is degenerate: acceptance rate " +
              detail::format_g12(result.acceptance_rate));
  }
  log::debug("posterior sampler: acceptance " + detail::format_g12(result.acceptance_rate) +
             ", final proposal concentration " + detail::format_g12(kappa));
  return result;
}

SimplexWeights posterior_mean(const PosteriorSample& sample) {
  if (sample.draws.empty()) fail_validation("validation", "posterior sample has no draws");
  const std::size_t j = sample.draws.front().size();
  std::vector<double> mean(j, 0.0);
  for (const auto& draw : sample.draws) {
    for (std::size_t i = 0; i < j; ++i) mean[i] += draw[i];
  }
  for (double& m : mean) m /= static_cast<double>(sample.draws.size());
  return SimplexWeights(std::move(mean));
}

std::vector<double> posterior_stddev(const PosteriorSample& sample) {
  const SimplexWeights mean = posterior_mean(sample);
  std::vector<double> var(mean.size(), 0.0);
  for (const auto& draw : sample.draws) {
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double d = draw[i] - mean[i];
      var[i] += d * d;
    }
  }
  for (double& v : var) v = std::sqrt(v / static_cast<double>(sample.draws.size()));
  return var;
}

}  // namespace gbps
