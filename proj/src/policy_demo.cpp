#include "gbps/policy_demo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gbps/errors.hpp"
#include "gbps/experts.hpp"
#include "gbps/log.hpp"
#include "gbps/rng.hpp"
#include "gbps/static_posterior.hpp"
#include "gbps/detail/text.hpp"

namespace gbps {

namespace {

struct DemoData {
  std::vector<double> x;
  std::vector<int> arm;
  std::vector<double> y;
};

DemoData generate_data(const DemoConfig& cfg, const std::vector<double>& means,
                       const std::vector<double>& slopes, const std::vector<double>& propensity,
                       Rng& rng) {
  DemoData data;
  const auto n = static_cast<std::size_t>(cfg.samples);
  data.x.resize(n);
  data.arm.resize(n);
  data.y.resize(n);
  const auto k = static_cast<std::size_t>(cfg.treatments);
  for (std::size_t i = 0; i < n; ++i) {
    data.x[i] = rng.normal();
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t a = k - 1;
    for (std::size_t c = 0; c < k; ++c) {
      acc += propensity[c];
      if (u < acc) {
        a = c;
        break;
      }
    }
    data.arm[i] = static_cast<int>(a);
    data.y[i] = means[a] + slopes[a] * data.x[i] + cfg.outcome_noise * rng.normal();
  }
  return data;
}

// Direct method: per-arm OLS of Y on (1, X), averaged over the covariate
// sample. Falls back to the arm mean when a bootstrap draw leaves an arm
// too thin to regress.
std::vector<double> dm_values(const DemoData& data, std::span<const std::size_t> index, int k) {
  std::vector<double> values(static_cast<std::size_t>(k), 0.0);
  double x_mean_all = 0.0;
  for (std::size_t i : index) x_mean_all += data.x[i];
  x_mean_all /= static_cast<double>(index.size());

  for (int a = 0; a < k; ++a) {
    double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i : index) {
      if (data.arm[i] != a) continue;
      n += 1.0;
      sx += data.x[i];
      sy += data.y[i];
      sxx += data.x[i] * data.x[i];
      sxy += data.x[i] * data.y[i];
    }
    if (n < 1.0) fail_runtime("degenerate", "an arm received no observations");
    const double det = n * sxx - sx * sx;
    if (n >= 3.0 && std::abs(det) > 1e-12 * n * std::max(sxx, 1.0)) {
      const double slope = (n * sxy - sx * sy) / det;
      const double intercept = (sy - slope * sx) / n;
      values[static_cast<std::size_t>(a)] = intercept + slope * x_mean_all;
    } else {
      values[static_cast<std::size_t>(a)] = sy / n;
    }
  }
  return values;
}

// IPW: (1/n) sum_i 1[A_i = a] Y_i / propensity(a).
std::vector<double> ipw_values(const DemoData& data, std::span<const std::size_t> index, int k,
                               const std::vector<double>& propensity) {
  std::vector<double> values(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i : index) {
    values[static_cast<std::size_t>(data.arm[i])] +=
        data.y[i] / propensity[static_cast<std::size_t>(data.arm[i])];
  }
  for (double& v : values) v /= static_cast<double>(index.size());
  return values;
}

}  // namespace

DemoReport policy_learning_demo(const DemoConfig& cfg) {
  if (cfg.treatments < 2) fail_validation("validation", "need at least 2 treatments");
  if (cfg.samples < 100) fail_validation("validation", "need at least 100 samples");
  if (cfg.bootstrap_rounds < 2) fail_validation("validation", "need at least 2 bootstrap rounds");
  const auto k = static_cast<std::size_t>(cfg.treatments);

  std::vector<double> means = cfg.arm_means;
  if (means.empty()) {
    for (std::size_t a = 0; a < k; ++a) means.push_back(0.5 - 0.2 * static_cast<double>(a));
  }
  std::vector<double> slopes = cfg.arm_slopes;
  if (slopes.empty()) slopes.assign(k, 0.0);
  std::vector<double> propensity = cfg.propensities;
  if (propensity.empty()) propensity.assign(k, 1.0 / static_cast<double>(k));
  if (means.size() != k || slopes.size() != k || propensity.size() != k) {
    fail_validation("dimension", "arm_means, arm_slopes and propensities must list " +
                                     std::to_string(k) + " entries");
  }
  double prop_sum = 0.0;
  for (double p : propensity) {
    if (p < 0.01) {
      fail_validation("validation", "degenerate propensity " + detail::format_g12(p) +
                                        " (every arm needs probability >= 0.01)");
    }
    prop_sum += p;
  }
  if (std::abs(prop_sum - 1.0) > 1e-6) {
    fail_validation("validation", "propensities sum to " + detail::format_g12(prop_sum));
  }
  for (double& p : propensity) p /= prop_sum;

  Rng rng(cfg.seed);
  const DemoData data = generate_data(cfg, means, slopes, propensity, rng);
  std::vector<std::size_t> full_index(static_cast<std::size_t>(cfg.samples));
  std::iota(full_index.begin(), full_index.end(), 0u);

  const auto estimator = [&](const std::string& id, std::span<const std::size_t> idx) {
    if (cfg.oracle_experts) return means;
    return id == "DM" ? dm_values(data, idx, cfg.treatments)
                      : ipw_values(data, idx, cfg.treatments, propensity);
  };

  DemoReport report;
  report.seed = cfg.seed;
  report.true_arm_values = means;

  for (const char* expert_id : {"DM", "IPW"}) {
    const std::string id = expert_id;
    const double bias = (id == "IPW") ? cfg.ipw_loss_bias : 0.0;
    DemoExpertResult expert;
    expert.id = id;
    expert.value_estimates = estimator(id, full_index);
    expert.losses.resize(k);
    for (std::size_t a = 0; a < k; ++a) expert.losses[a] = -expert.value_estimates[a] + bias;

    // Allocation from estimated values; loss scored against the same values.
    expert.policy = returns_to_policy(expert.value_estimates, cfg.softmax_temperature);
    const double point_loss = std::inner_product(expert.policy.begin(), expert.policy.end(),
                                                 expert.losses.begin(), 0.0);

    // Bootstrap the estimator (policy held fixed) for the loss predictive.
    double boot_mean = 0.0;
    double boot_m2 = 0.0;
    const std::uint64_t base = rng.stream_base();
    for (int b = 0; b < cfg.bootstrap_rounds; ++b) {
      Rng boot_rng(mix_seed(base, static_cast<std::uint64_t>(b)));
      std::vector<std::size_t> idx(full_index.size());
      for (auto& i : idx) {
        i = std::min(static_cast<std::size_t>(boot_rng.uniform() * full_index.size()),
                     full_index.size() - 1);
      }
      std::vector<double> v = cfg.oracle_experts ? means : estimator(id, idx);
      double z = bias;
      for (std::size_t a = 0; a < k; ++a) z -= expert.policy[a] * v[a];
      const double delta = z - boot_mean;
      boot_mean += delta / static_cast<double>(b + 1);
      boot_m2 += delta * (z - boot_mean);
    }
    const double boot_var = boot_m2 / static_cast<double>(cfg.bootstrap_rounds - 1);
    expert.loss_predictive = GaussianPredictive::checked(boot_mean, std::max(0.0, boot_var));
    log::debug("demo expert " + id + ": point loss " + detail::format_g12(point_loss) +
               ", bootstrap loss " + detail::format_g12(boot_mean) + " +- " +
               detail::format_g12(std::sqrt(std::max(0.0, boot_var))));

    expert.true_value = 0.0;
    for (std::size_t a = 0; a < k; ++a) expert.true_value += expert.policy[a] * means[a];
    report.experts.push_back(std::move(expert));
  }

  std::vector<LossPredictive> predictives;
  std::vector<SimplexWeights> rows;
  for (const auto& e : report.experts) {
    predictives.push_back(
        LossPredictive::gaussian(e.loss_predictive.mean, e.loss_predictive.variance));
    rows.push_back(e.policy);
  }
  PosteriorOptions opts;
  opts.n_samples = cfg.posterior_samples;
  opts.burn_in = cfg.posterior_burn_in;
  opts.lambda = cfg.lambda;
  const std::vector<double> alpha(report.experts.size(), 1.0);
  const PosteriorSample sample =
      sample_posterior(PredictiveEnsemble{std::move(predictives)}, alpha, opts, rng.next_u64());

  const SimplexWeights theta = posterior_mean(sample);
  report.posterior_theta.assign(theta.begin(), theta.end());
  report.acceptance_rate = sample.acceptance_rate;
  report.synthesized_policy = ensemble_policy(theta, PolicyMatrix{std::move(rows)});
  report.synthesized_true_value = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    report.synthesized_true_value += report.synthesized_policy[a] * means[a];
  }
  return report;
}

void write_demo_report(const DemoReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail_validation("io", "cannot create directory " + detail::quoted(out_dir.string()));

  {
    const auto path = out_dir / "demo_summary.csv";
    std::ofstream out(path);
    if (!out) fail_validation("io", "cannot write " + detail::quoted(path.string()));
    out << "metric,value\n";
    for (std::size_t j = 0; j < report.experts.size(); ++j) {
      out << "theta_" << report.experts[j].id << ',' << detail::format_g12(report.posterior_theta[j])
          << '\n';
    }
    for (const auto& e : report.experts) {
      out << "true_value_" << e.id << ',' << detail::format_g12(e.true_value) << '\n';
    }
    out << "true_value_ensemble," << detail::format_g12(report.synthesized_true_value) << '\n';
    out << "acceptance_rate," << detail::format_g12(report.acceptance_rate) << '\n';
    out << "seed," << report.seed << '\n';
  }
  {
    const auto path = out_dir / "demo_policies.csv";
    std::ofstream out(path);
    if (!out) fail_validation("io", "cannot write " + detail::quoted(path.string()));
    out << "arm";
    for (const auto& e : report.experts) out << ",policy_" << e.id;
    out << ",policy_ensemble,true_arm_value\n";
    for (std::size_t a = 0; a < report.true_arm_values.size(); ++a) {
      out << a;
      for (const auto& e : report.experts) out << ',' << detail::format_g12(e.policy[a]);
      out << ',' << detail::format_g12(report.synthesized_policy[a]) << ','
          << detail::format_g12(report.true_arm_values[a]) << '\n';
    }
  }
}

}  // namespace gbps
