#include "gbps/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gbps/errors.hpp"
#include "gbps/detail/text.hpp"

namespace gbps {

GaussianPredictive GaussianPredictive::checked(double mean, double variance) {
  if (!std::isfinite(mean) || !std::isfinite(variance) || variance < 0.0) {
    fail_validation("validation", "Gaussian predictive needs finite mean and variance >= 0, got mean=" +
                                      detail::format_g12(mean) + " variance=" +
                                      detail::format_g12(variance));
  }
  return GaussianPredictive{mean, variance};
}

LossPredictive LossPredictive::gaussian(double mean, double variance) {
  return LossPredictive(GaussianPredictive::checked(mean, variance));
}

LossPredictive LossPredictive::empirical(std::vector<double> samples) {
  if (samples.empty()) fail_validation("validation", "empirical predictive needs at least one sample");
  for (double s : samples) {
    if (!std::isfinite(s)) fail_validation("validation", "empirical predictive contains a non-finite sample");
  }
  return LossPredictive(std::move(samples));
}

const GaussianPredictive& LossPredictive::gaussian_params() const {
  if (!is_gaussian()) fail_validation("validation", "predictive is empirical, not Gaussian");
  return std::get<GaussianPredictive>(value_);
}

std::span<const double> LossPredictive::samples() const {
  if (is_gaussian()) fail_validation("validation", "predictive is Gaussian, not empirical");
  return std::get<std::vector<double>>(value_);
}

double LossPredictive::log_mgf(double t) const {
  if (is_gaussian()) {
    const auto& g = std::get<GaussianPredictive>(value_);
    return t * g.mean + 0.5 * t * t * g.variance;
  }
  const auto& atoms = std::get<std::vector<double>>(value_);
  double top = -std::numeric_limits<double>::infinity();
  for (double z : atoms) top = std::max(top, t * z);
  double acc = 0.0;
  for (double z : atoms) acc += std::exp(t * z - top);
  return top + std::log(acc / static_cast<double>(atoms.size()));
}

double LossPredictive::draw(Rng& rng) const {
  if (is_gaussian()) {
    const auto& g = std::get<GaussianPredictive>(value_);
    return g.mean + std::sqrt(g.variance) * rng.normal();
  }
  const auto& atoms = std::get<std::vector<double>>(value_);
  const auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(atoms.size()));
  return atoms[std::min(idx, atoms.size() - 1)];
}

PredictiveEnsemble::PredictiveEnsemble(std::vector<LossPredictive> experts)
    : experts_(std::move(experts)) {
  if (experts_.empty()) fail_validation("validation", "predictive ensemble needs at least one expert");
  for (const auto& e : experts_) all_gaussian_ = all_gaussian_ && e.is_gaussian();
}

}  // namespace gbps
