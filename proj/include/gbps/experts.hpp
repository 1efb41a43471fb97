#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gbps/market_data.hpp"
#include "gbps/predictive.hpp"
#include "gbps/simplex.hpp"

namespace gbps {

/// AR(p) model with intercept, fitted by ordinary least squares.
struct ArModel {
  int order = 1;
  double intercept = 0.0;
  std::vector<double> coefficients;  // lag 1 (newest) .. lag p
  double residual_variance = 0.0;
};

/// OLS fit of y_t on (1, y_{t-1}, ..., y_{t-p}). Requires enough rows for at
/// least one residual degree of freedom (n - p >= p + 2); an exactly
/// collinear design (e.g. a constant series) raises a singular-design error.
ArModel fit_ar(std::span<const double> series, int order);

/// One-step-ahead predictive: mean from the fitted recursion on the last p
/// values (oldest first), variance equal to the OLS residual variance.
GaussianPredictive forecast_ar(const ArModel& model, std::span<const double> recent);

/// Mean/unbiased-variance of the last `window` values (window >= 2).
GaussianPredictive sample_mean_forecast(std::span<const double> series, int window);

/// Long-only allocation from per-asset forecast means:
/// policy(a) proportional to exp(mean_a / temperature).
SimplexWeights returns_to_policy(std::span<const double> forecast_means, double temperature);

/// Loss predictive of holding `policy` when per-asset returns are
/// independent Gaussians: loss = -sum_a w(a) * return_a, so
/// mean = -sum w(a) mean_a and variance = sum w(a)^2 var_a.
GaussianPredictive expert_loss_predictive(const SimplexWeights& policy,
                                          std::span<const GaussianPredictive> per_asset_returns);

/// One expert's output at a decision epoch: allocation plus loss predictive.
struct ExpertForecast {
  SimplexWeights policy;
  GaussianPredictive loss_predictive;
  std::string expert_id;
};

struct ExpertSpec {
  enum class Kind { sample_mean, autoregressive };

  Kind kind = Kind::sample_mean;
  int window = 12;  // months of history used by the fit
  int order = 0;    // AR order; 0 for sample-mean experts

  static ExpertSpec sample_mean(int window);
  static ExpertSpec autoregressive(int order, int window = 36);

  std::string id() const;

  /// Months of history needed before a forecast can be made.
  int required_history() const { return window + order; }
};

struct ExpertBankConfig {
  std::vector<ExpertSpec> experts = default_bank();
  double softmax_temperature = 0.02;
  /// On a singular AR design, fall back to the windowed sample-mean
  /// predictive instead of aborting. Backtests default this on so constant
  /// synthetic fixtures run end to end; direct library calls default it off.
  bool singular_fallback_to_mean = false;

  /// Mean[12m], Mean[36m], AR(1), AR(2), AR(3) on 36-month windows.
  static std::vector<ExpertSpec> default_bank();

  int required_history() const;
};

/// Fits every configured expert on returns strictly before row `t` and emits
/// policies plus loss predictives, in fixed expert order. Insufficient
/// history aborts the call rather than silently dropping experts.
std::vector<ExpertForecast> build_expert_bank(const ReturnTable& returns, std::size_t t,
                                              const ExpertBankConfig& config);

}  // namespace gbps
