#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "gbps/rng.hpp"

namespace gbps {

/// Gaussian predictive distribution of a scalar loss.
struct GaussianPredictive {
  double mean = 0.0;
  double variance = 0.0;  // >= 0, finite

  /// Throws on negative or non-finite parameters.
  static GaussianPredictive checked(double mean, double variance);
};

/// One expert's loss predictive h_j: either Gaussian or an empirical set of
/// loss draws (treated as an atomic measure, all atoms equally weighted).
class LossPredictive {
 public:
  static LossPredictive gaussian(double mean, double variance);
  static LossPredictive empirical(std::vector<double> samples);

  bool is_gaussian() const noexcept { return std::holds_alternative<GaussianPredictive>(value_); }
  const GaussianPredictive& gaussian_params() const;
  std::span<const double> samples() const;

  /// log E[exp(t Z)]; closed form for the Gaussian family, exact log-mean-exp
  /// over the atoms for empirical sets.
  double log_mgf(double t) const;

  /// One draw from the predictive (Gaussian sample or uniform atom pick).
  double draw(Rng& rng) const;

 private:
  explicit LossPredictive(std::variant<GaussianPredictive, std::vector<double>> v)
      : value_(std::move(v)) {}
  std::variant<GaussianPredictive, std::vector<double>> value_;
};

/// The set H = (h_j) of all experts' loss predictives at one decision epoch.
class PredictiveEnsemble {
 public:
  explicit PredictiveEnsemble(std::vector<LossPredictive> experts);

  std::size_t size() const noexcept { return experts_.size(); }
  const LossPredictive& expert(std::size_t j) const { return experts_[j]; }
  bool all_gaussian() const noexcept { return all_gaussian_; }

 private:
  std::vector<LossPredictive> experts_;
  bool all_gaussian_ = true;
};

}  // namespace gbps
