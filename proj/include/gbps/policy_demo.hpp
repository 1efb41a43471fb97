#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gbps/predictive.hpp"
#include "gbps/simplex.hpp"

namespace gbps {

/// Synthetic policy-learning experiment: data (X_i, A_i, Y_i) is generated
/// with known conditional outcome means and known propensities, two value
/// estimators (direct method and inverse propensity weighting) act as
/// experts, and the static posterior over ensemble weights combines them.
struct DemoConfig {
  int treatments = 3;  // K >= 2
  int samples = 2000;  // n >= 100

  /// True outcome model: Y(a) | X ~ N(arm_means[a] + arm_slopes[a] * X, noise^2)
  /// with scalar X ~ N(0, 1). Empty slopes default to zero.
  std::vector<double> arm_means;
  std::vector<double> arm_slopes;
  double outcome_noise = 0.25;

  /// Known treatment-assignment probabilities; every entry must be >= 0.01.
  /// Empty defaults to uniform.
  std::vector<double> propensities;

  /// Hand both experts the exact outcome means (no estimation noise).
  bool oracle_experts = false;
  /// Constant added to the IPW expert's losses; models a broken estimator.
  double ipw_loss_bias = 0.0;

  double softmax_temperature = 0.05;
  /// Loss temperature for the posterior. Demo losses are estimated values
  /// in outcome units (order one), so the default is well above the
  /// portfolio default of 1.
  double lambda = 10.0;
  int bootstrap_rounds = 200;
  int posterior_samples = 5000;
  int posterior_burn_in = 2000;
  std::uint64_t seed = 42;
};

struct DemoExpertResult {
  std::string id;                       // "DM" or "IPW"
  std::vector<double> value_estimates;  // estimated E[Y(a)] per arm
  std::vector<double> losses;           // per-arm losses fed to the policy
  SimplexWeights policy = SimplexWeights::uniform(1);
  GaussianPredictive loss_predictive;
  double true_value = 0.0;  // sum_a policy(a) * true arm mean
};

struct DemoReport {
  std::vector<double> true_arm_values;
  std::vector<DemoExpertResult> experts;
  std::vector<double> posterior_theta;  // posterior-mean ensemble weights
  double acceptance_rate = 0.0;
  SimplexWeights synthesized_policy = SimplexWeights::uniform(1);
  double synthesized_true_value = 0.0;
  std::uint64_t seed = 0;
};

DemoReport policy_learning_demo(const DemoConfig& config);

/// Writes demo_summary.csv (metric,value) and demo_policies.csv
/// (per-arm policies and true values) into out_dir.
void write_demo_report(const DemoReport& report, const std::filesystem::path& out_dir);

}  // namespace gbps
