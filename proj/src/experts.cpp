#include "gbps/experts.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gbps/errors.hpp"
#include "gbps/detail/text.hpp"

namespace gbps {

ArModel fit_ar(std::span<const double> series, int order) {
  if (order < 1) fail_validation("validation", "AR order must be >= 1");
  const auto n = static_cast<int>(series.size());
  const int p = order;
  if (n - p < p + 2) {
    fail_validation("insufficient_data", "AR(" + std::to_string(p) + ") needs at least " +
                                             std::to_string(2 * p + 2) + " points, got " +
                                             std::to_string(n));
  }
  for (double v : series) {
    if (!std::isfinite(v)) fail_validation("validation", "AR series contains a non-finite value");
  }

  const int rows = n - p;
  Eigen::MatrixXd design(rows, p + 1);
  Eigen::VectorXd target(rows);
  for (int i = 0; i < rows; ++i) {
    const int t = p + i;
    design(i, 0) = 1.0;
    for (int lag = 1; lag <= p; ++lag) design(i, lag) = series[t - lag];
    target(i) = series[t];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p + 1) {
    fail_validation("singular_design", "AR(" + std::to_string(p) +
                                           ") design is exactly collinear (constant series?)");
  }
  const Eigen::VectorXd beta = qr.solve(target);
  const double rss = (target - design * beta).squaredNorm();
  const int dof = rows - (p + 1);

  ArModel model;
  model.order = p;
  model.intercept = beta(0);
  model.coefficients.assign(beta.data() + 1, beta.data() + 1 + p);
  model.residual_variance = std::max(0.0, rss / static_cast<double>(dof));
  return model;
}

GaussianPredictive forecast_ar(const ArModel& model, std::span<const double> recent) {
  const auto p = static_cast<std::size_t>(model.order);
  if (recent.size() != p) {
    fail_validation("dimension", "AR(" + std::to_string(model.order) + ") forecast needs " +
                                     std::to_string(model.order) + " lagged values, got " +
                                     std::to_string(recent.size()));
  }
  double mean = model.intercept;
  // recent is oldest -> newest; coefficient i multiplies lag i+1.
  for (std::size_t i = 0; i < p; ++i) mean += model.coefficients[i] * recent[p - 1 - i];
  return GaussianPredictive::checked(mean, model.residual_variance);
}

GaussianPredictive sample_mean_forecast(std::span<const double> series, int window) {
  if (window < 2) fail_validation("validation", "sample-mean window must be >= 2");
  if (series.size() < static_cast<std::size_t>(window)) {
    fail_validation("insufficient_data", "sample-mean window " + std::to_string(window) +
                                             " exceeds series length " +
                                             std::to_string(series.size()));
  }
  const auto tail = series.subspan(series.size() - static_cast<std::size_t>(window));
  double mean = 0.0;
  for (double v : tail) {
    if (!std::isfinite(v)) fail_validation("validation", "series contains a non-finite value");
    mean += v;
  }
  mean /= static_cast<double>(window);
  double ss = 0.0;
  for (double v : tail) ss += (v - mean) * (v - mean);
  return GaussianPredictive::checked(mean, ss / static_cast<double>(window - 1));
}

SimplexWeights returns_to_policy(std::span<const double> forecast_means, double temperature) {
  if (forecast_means.empty()) fail_validation("validation", "need at least one forecast mean");
  if (!(temperature > 0.0)) fail_validation("validation", "softmax temperature must be positive");
  double top = -std::numeric_limits<double>::infinity();
  for (double m : forecast_means) {
    if (!std::isfinite(m)) fail_validation("validation", "forecast means must be finite");
    top = std::max(top, m);
  }
  std::vector<double> weights(forecast_means.size());
  double sum = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    weights[a] = std::exp((forecast_means[a] - top) / temperature);
    sum += weights[a];
  }
  for (double& w : weights) w /= sum;
  return SimplexWeights(std::move(weights));
}

GaussianPredictive expert_loss_predictive(const SimplexWeights& policy,
                                          std::span<const GaussianPredictive> per_asset_returns) {
  if (policy.size() != per_asset_returns.size()) {
    fail_validation("dimension", "policy covers " + std::to_string(policy.size()) +
                                     " assets but " + std::to_string(per_asset_returns.size()) +
                                     " return predictives were given");
  }
  double mean = 0.0;
  double variance = 0.0;
  for (std::size_t a = 0; a < policy.size(); ++a) {
    mean -= policy[a] * per_asset_returns[a].mean;
    variance += policy[a] * policy[a] * per_asset_returns[a].variance;
  }
  return GaussianPredictive::checked(mean, variance);
}

ExpertSpec ExpertSpec::sample_mean(int window) {
  if (window < 2) fail_validation("validation", "sample-mean expert window must be >= 2");
  return ExpertSpec{Kind::sample_mean, window, 0};
}

ExpertSpec ExpertSpec::autoregressive(int order, int window) {
  if (order < 1) fail_validation("validation", "AR expert order must be >= 1");
  if (window - order < order + 2) {
    fail_validation("validation", "AR(" + std::to_string(order) + ") window " +
                                      std::to_string(window) + " leaves too few regression rows");
  }
  return ExpertSpec{Kind::autoregressive, window, order};
}

std::string ExpertSpec::id() const {
  if (kind == Kind::sample_mean) return "Mean" + std::to_string(window) + "m";
  return "AR" + std::to_string(order);
}

std::vector<ExpertSpec> ExpertBankConfig::default_bank() {
  return {ExpertSpec::sample_mean(12), ExpertSpec::sample_mean(36), ExpertSpec::autoregressive(1),
          ExpertSpec::autoregressive(2), ExpertSpec::autoregressive(3)};
}

int ExpertBankConfig::required_history() const {
  if (experts.empty()) fail_validation("validation", "expert bank is empty");
  int needed = 0;
  for (const auto& spec : experts) needed = std::max(needed, spec.required_history());
  return needed;
}

namespace {

ExpertForecast make_forecast(const ReturnTable& returns, std::size_t t, const ExpertSpec& spec,
                             const ExpertBankConfig& config) {
  const std::size_t k_assets = returns.cols();
  const auto slice_len = static_cast<std::size_t>(spec.required_history());
  std::vector<GaussianPredictive> per_asset(k_assets);
  std::vector<double> means(k_assets);

  for (std::size_t k = 0; k < k_assets; ++k) {
    // History strictly before t: rows [t - slice_len, t).
    std::vector<double> series(slice_len);
    for (std::size_t i = 0; i < slice_len; ++i) series[i] = returns.at(t - slice_len + i, k);

    GaussianPredictive forecast;
    if (spec.kind == ExpertSpec::Kind::sample_mean) {
      forecast = sample_mean_forecast(series, spec.window);
    } else {
      try {
        const ArModel model = fit_ar(series, spec.order);
        const std::span<const double> recent =
            std::span<const double>(series).subspan(series.size() - static_cast<std::size_t>(spec.order));
        forecast = forecast_ar(model, recent);
      } catch (const Error& e) {
        if (e.code() == "singular_design" && config.singular_fallback_to_mean) {
          forecast = sample_mean_forecast(series, spec.window);
        } else {
          throw Error(ErrorKind::validation, e.code(),
                      "expert " + spec.id() + ", asset " + detail::quoted(returns.assets[k]) + ": " +
                          e.what());
        }
      }
    }
    per_asset[k] = forecast;
    means[k] = forecast.mean;
  }

  ExpertForecast out{returns_to_policy(means, config.softmax_temperature),
                     GaussianPredictive{}, spec.id()};
  out.loss_predictive = expert_loss_predictive(out.policy, per_asset);
  return out;
}

}  // namespace

std::vector<ExpertForecast> build_expert_bank(const ReturnTable& returns, std::size_t t,
                                              const ExpertBankConfig& config) {
  const int needed = config.required_history();
  if (t > returns.rows()) {
    fail_validation("validation", "decision index " + std::to_string(t) + " is outside the table");
  }
  if (t < static_cast<std::size_t>(needed)) {
    fail_validation("insufficient_history",
                    "expert bank needs " + std::to_string(needed) + " months of history, only " +
                        std::to_string(t) + " available before the decision month");
  }
  std::vector<ExpertForecast> bank;
  bank.reserve(config.experts.size());
  for (const auto& spec : config.experts) bank.push_back(make_forecast(returns, t, spec, config));
  return bank;
}

}  // namespace gbps
