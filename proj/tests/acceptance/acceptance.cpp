// Acceptance suite: each criterion prints one pass/fail line with its
// measured numbers and runtime. Run a single criterion with
// `gbps_acceptance --criterion <n>`; the exit code is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gbps/backtest.hpp"
#include "gbps/experts.hpp"
#include "gbps/log.hpp"
#include "gbps/particle_filter.hpp"
#include "gbps/policy_demo.hpp"
#include "gbps/static_posterior.hpp"
#include "../oracles.hpp"

using namespace gbps;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

PredictiveEnsemble gaussians(const std::vector<double>& means, const std::vector<double>& vars) {
  std::vector<LossPredictive> experts;
  for (std::size_t j = 0; j < means.size(); ++j) {
    experts.push_back(LossPredictive::gaussian(means[j], vars[j]));
  }
  return PredictiveEnsemble(std::move(experts));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// 1. Monte Carlo kernel vs the analytic Gaussian kernel: 100 random
//    (theta, ensemble, lambda) triples, n = 1e5 draws, J in {2..6};
//    at least 97 must land within 3 reported standard errors.
Outcome criterion_mc_kernel() {
  Rng instance_rng(2024);
  int hits = 0;
  const int cases = 100;
  for (int c = 0; c < cases; ++c) {
    const std::size_t j_experts = 2 + static_cast<std::size_t>(instance_rng.uniform() * 5.0);
    std::vector<double> means(j_experts), vars(j_experts), alpha(j_experts, 1.0);
    for (double& m : means) m = 2.0 * (instance_rng.uniform() - 0.5);
    for (double& v : vars) v = 0.1 + 0.9 * instance_rng.uniform();
    const double lambda = 0.5 + 1.5 * instance_rng.uniform();
    const SimplexWeights theta = sample_dirichlet(alpha, instance_rng);
    const auto ensemble = gaussians(means, vars);

    Rng draw_rng(9000 + static_cast<std::uint64_t>(c));
    const auto mc = mc_log_weight(theta, ensemble, 100000, lambda, draw_rng);
    const double exact = analytic_log_weight(theta, ensemble, lambda);
    if (std::abs(mc.estimate - exact) <= 3.0 * mc.std_error) ++hits;
  }
  return {hits >= 97, std::to_string(hits) + "/100 triples within 3 SE (required >= 97)"};
}

// 2. Static posterior vs dense simplex grids: five random instances each for
//    J = 2 and J = 3; every posterior-mean component within 0.03.
Outcome criterion_static_grid() {
  Rng instance_rng(77);
  PosteriorOptions opts;  // 5000 draws, 2000 burn-in, lambda 1
  double worst = 0.0;
  for (int j_experts : {2, 3}) {
    for (int inst = 0; inst < 5; ++inst) {
      std::vector<double> means(static_cast<std::size_t>(j_experts));
      std::vector<double> vars(static_cast<std::size_t>(j_experts));
      const std::vector<double> alpha(static_cast<std::size_t>(j_experts), 1.0);
      for (double& m : means) m = 1.5 * instance_rng.normal();
      for (double& v : vars) v = 0.05 + instance_rng.uniform();
      const auto sample = sample_posterior(gaussians(means, vars), alpha, opts,
                                           3000 + static_cast<std::uint64_t>(10 * j_experts + inst));
      const auto mean = posterior_mean(sample);
      const std::vector<double> grid =
          j_experts == 2 ? oracle::grid_posterior_mean_2(means, vars, opts.lambda, alpha)
                         : oracle::grid_posterior_mean_3(means, vars, opts.lambda, alpha);
      for (std::size_t d = 0; d < grid.size(); ++d) {
        worst = std::max(worst, std::abs(mean[d] - grid[d]));
      }
    }
  }
  return {worst <= 0.03, "max |sampler - grid| = " + fmt(worst) + " over 10 instances (tol 0.03)"};
}

// 3. Dominant-expert concentration as specified: means (-1, +1, +1),
//    variances 0.01, lambda = 1, uniform prior; requires posterior-mean
//    theta_1 >= 0.85 with grid verification.
Outcome criterion_dominant_expert() {
  const std::vector<double> means{-1.0, 1.0, 1.0};
  const std::vector<double> vars{0.01, 0.01, 0.01};
  const std::vector<double> alpha{1.0, 1.0, 1.0};
  PosteriorOptions opts;  // lambda = 1
  const auto sample = sample_posterior(gaussians(means, vars), alpha, opts, 404);
  const double theta1 = posterior_mean(sample)[0];
  const auto grid = oracle::grid_posterior_mean_3(means, vars, opts.lambda, alpha);
  const bool agree = std::abs(theta1 - grid[0]) <= 0.03;
  const bool pass = theta1 >= 0.85 && grid[0] >= 0.85;
  return {pass, "posterior-mean theta_1: sampler " + fmt(theta1) + ", grid oracle " + fmt(grid[0]) +
                    (agree ? " (routes agree)" : " (routes disagree)") + ", required >= 0.85"};
}

// 4. Dynamic filter vs a 2000-point grid filter: J = 2, T = 20 random
//    Gaussian ensembles, N = 1e5 particles; max_t |difference of posterior
//    means| <= 0.03.
Outcome criterion_dynamic_grid() {
  Rng instance_rng(99);
  const int horizon = 20;
  std::vector<std::vector<double>> means, vars;
  for (int t = 0; t < horizon; ++t) {
    means.push_back({instance_rng.normal(), instance_rng.normal()});
    vars.push_back({0.1 + 0.9 * instance_rng.uniform(), 0.1 + 0.9 * instance_rng.uniform()});
  }
  EvolutionConfig config;  // e = 0.95, jitter = 0.01, threshold 0.5
  Rng rng(555);
  auto cloud = init_particles(2, 100000, std::vector<double>{1.0, 1.0}, rng);
  oracle::GridFilter2 grid(config.discount, config.jitter);
  double worst = 0.0;
  for (int t = 0; t < horizon; ++t) {
    auto result = step(std::move(cloud), gaussians(means[static_cast<std::size_t>(t)],
                                                   vars[static_cast<std::size_t>(t)]),
                       config, 1.0, rng);
    cloud = std::move(result.cloud);
    const double g = grid.reweight_mean(means[static_cast<std::size_t>(t)],
                                        vars[static_cast<std::size_t>(t)], 1.0);
    grid.evolve();
    worst = std::max(worst, std::abs(result.summary.posterior_mean[0] - g));
  }
  return {worst <= 0.03, "max_t |particle - grid| = " + fmt(worst) + " over T=20 (tol 0.03)"};
}

// 5. Regime tracking: expert loss means swap from (-1, +1) to (+1, -1) at
//    t = 25 (var 0.01, e = 0.95); filtering mean theta_2 must exceed 0.8 by
//    t = 35 in at least 19 of 20 seeds.
Outcome criterion_regime_tracking() {
  EvolutionConfig config;  // e = 0.95, jitter = 0.01
  const std::vector<double> vars{0.01, 0.01};
  int successes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    auto cloud = init_particles(2, 5000, std::vector<double>{1.0, 1.0}, rng);
    bool crossed = false;
    for (int t = 1; t <= 35; ++t) {
      const std::vector<double> means =
          t <= 25 ? std::vector<double>{-1.0, 1.0} : std::vector<double>{1.0, -1.0};
      auto result = step(std::move(cloud), gaussians(means, vars), config, 1.0, rng);
      cloud = std::move(result.cloud);
      if (t > 25 && result.summary.posterior_mean[1] > 0.8) crossed = true;
    }
    if (crossed) ++successes;
  }
  return {successes >= 19,
          std::to_string(successes) + "/20 seeds crossed theta_2 > 0.8 by t=35 (required >= 19)"};
}

ReturnTable acceptance_market() {
  std::vector<RegimeSegment> regimes(2);
  regimes[0] = {1, {0.03, -0.02, 0.005, 0.0, 0.01}, {0.02, 0.02, 0.03, 0.01, 0.02}};
  regimes[1] = {61, {-0.02, 0.03, 0.0, 0.005, -0.01}, {0.02, 0.02, 0.03, 0.01, 0.02}};
  return generate_synthetic({"A", "B", "C", "D", "E"}, 120, YearMonth{2000, 1}, regimes, 12);
}

BacktestConfig acceptance_backtest_config(const ReturnTable& table) {
  BacktestConfig config;
  config.train_start = table.dates.front();
  config.train_end = table.dates.front().plus_months(44);
  config.test_end = table.dates.back();
  return config;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 6. Backtest convexity, accounting and determinism on a 120-month
//    five-asset synthetic market with the default five-expert bank.
Outcome criterion_backtest_invariants() {
  const auto table = acceptance_market();
  const auto config = acceptance_backtest_config(table);
  const auto report = run_backtest(table, config);

  double worst_accounting = 0.0;
  bool sandwich = true;
  for (const auto& rec : report.records) {
    double mix = 0.0;
    double best = -1e300, worstr = 1e300;
    for (std::size_t j = 0; j < rec.theta.size(); ++j) {
      mix += rec.theta[j] * (-rec.realized_losses[j]);
      best = std::max(best, rec.expert_returns[j]);
      worstr = std::min(worstr, rec.expert_returns[j]);
    }
    worst_accounting = std::max(worst_accounting, std::abs(rec.gbps_return - mix));
    if (rec.gbps_return < worstr - 1e-9 || rec.gbps_return > best + 1e-9) sandwich = false;
  }

  const auto scratch = std::filesystem::temp_directory_path() /
                       ("gbps_acc6_" + std::to_string(::getpid()));
  std::filesystem::remove_all(scratch);
  const auto rerun = run_backtest(table, config);
  emit_report(report, scratch / "a");
  emit_report(rerun, scratch / "b");
  bool identical = true;
  for (const char* name : {"cumulative.csv", "weights.csv", "diagnostics.csv"}) {
    identical = identical && slurp(scratch / "a" / name) == slurp(scratch / "b" / name);
  }

  const bool pass = sandwich && worst_accounting <= 1e-9 && identical;
  return {pass, std::string(sandwich ? "sandwich ok" : "sandwich VIOLATED") +
                    ", max accounting gap " + fmt(worst_accounting) + " (tol 1e-9), reruns " +
                    (identical ? "byte-identical" : "DIFFER") + ", " +
                    std::to_string(report.records.size()) + " test months"};
}

// 7. Degenerate forcing: a single-expert run equals that expert exactly and
//    an identical-expert bank equals the common expert (tol 1e-12).
Outcome criterion_degenerate_forcing() {
  const auto table = acceptance_market();
  auto config = acceptance_backtest_config(table);

  config.experts.experts = {ExpertSpec::sample_mean(12)};
  const auto single = run_backtest(table, config);
  double worst_single = 0.0;
  for (const auto& rec : single.records) {
    worst_single = std::max(worst_single, std::abs(rec.gbps_return - rec.expert_returns[0]));
  }

  config.experts.experts = std::vector<ExpertSpec>(5, ExpertSpec::sample_mean(12));
  const auto clones = run_backtest(table, config);
  double worst_clones = 0.0;
  for (const auto& rec : clones.records) {
    worst_clones = std::max(worst_clones, std::abs(rec.gbps_return - rec.expert_returns[0]));
  }

  const bool pass = worst_single <= 1e-12 && worst_clones <= 1e-12;
  return {pass, "J=1 gap " + fmt(worst_single) + ", identical-expert gap " + fmt(worst_clones) +
                    " (tol 1e-12)"};
}

// 8. OLS oracle: fit_ar against brute-force normal equations on 50 random
//    well-conditioned instances (1e-10) plus noiseless recovery (1e-8).
Outcome criterion_ols_oracle() {
  Rng rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int p = 1 + static_cast<int>(rng.uniform() * 3.0);
    const int n = 50 + static_cast<int>(rng.uniform() * 100.0);
    std::vector<double> series(static_cast<std::size_t>(n));
    for (double& v : series) v = rng.normal();
    const auto model = fit_ar(series, p);
    const auto beta = oracle::brute_force_ar(series, p);
    worst = std::max(worst, std::abs(model.intercept - beta[0]));
    for (int i = 0; i < p; ++i) {
      worst = std::max(worst, std::abs(model.coefficients[static_cast<std::size_t>(i)] -
                                       beta[static_cast<std::size_t>(i) + 1]));
    }
  }

  std::vector<double> pure{0.0};
  for (int t = 1; t < 30; ++t) pure.push_back(1.0 + 0.5 * pure.back());
  const auto noiseless = fit_ar(pure, 1);
  const double recovery =
      std::max(std::abs(noiseless.intercept - 1.0),
               std::max(std::abs(noiseless.coefficients[0] - 0.5), noiseless.residual_variance));

  const bool pass = worst <= 1e-10 && recovery <= 1e-8;
  return {pass, "max |fit - normal equations| = " + fmt(worst) +
                    " (tol 1e-10), noiseless recovery error " + fmt(recovery) + " (tol 1e-8)"};
}

// 9. Policy-learning demo: the sabotaged instance hands the sound expert
//    posterior weight > 0.8 (grid-verified on the 2-simplex); the
//    oracle-expert instance matches the expert value to 1e-12.
Outcome criterion_policy_demo() {
  DemoConfig sabotage;
  sabotage.treatments = 3;
  sabotage.samples = 4000;
  sabotage.arm_means = {0.6, 0.3, 0.1};
  sabotage.arm_slopes = {0.2, 0.0, -0.1};
  sabotage.propensities = {0.4, 0.3, 0.3};
  sabotage.ipw_loss_bias = 1.0;
  sabotage.seed = 101;
  const auto report = policy_learning_demo(sabotage);
  const double theta_dm = report.posterior_theta[0];

  const std::vector<double> means{report.experts[0].loss_predictive.mean,
                                  report.experts[1].loss_predictive.mean};
  const std::vector<double> vars{report.experts[0].loss_predictive.variance,
                                 report.experts[1].loss_predictive.variance};
  const std::vector<double> alpha{1.0, 1.0};
  const auto grid = oracle::grid_posterior_mean_2(means, vars, sabotage.lambda, alpha);
  const bool grid_ok = grid[0] > 0.8 && std::abs(theta_dm - grid[0]) <= 0.03;

  DemoConfig oracle_cfg;
  oracle_cfg.oracle_experts = true;
  oracle_cfg.arm_means = {0.5, 0.2, -0.1};
  oracle_cfg.seed = 7;
  const auto oracle_report = policy_learning_demo(oracle_cfg);
  const double value_gap =
      std::abs(oracle_report.synthesized_true_value - oracle_report.experts[0].true_value);

  const bool pass = theta_dm > 0.8 && grid_ok && value_gap <= 1e-12;
  return {pass, "theta_DM " + fmt(theta_dm) + " (grid " + fmt(grid[0]) +
                    ", required > 0.8), oracle value gap " + fmt(value_gap) + " (tol 1e-12)"};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "gaussian-kernel-mc-oracle", criterion_mc_kernel},
      {2, "static-posterior-grid-oracle", criterion_static_grid},
      {3, "dominant-expert-concentration", criterion_dominant_expert},
      {4, "dynamic-filter-grid-oracle", criterion_dynamic_grid},
      {5, "regime-tracking", criterion_regime_tracking},
      {6, "backtest-invariants", criterion_backtest_invariants},
      {7, "degenerate-forcing", criterion_degenerate_forcing},
      {8, "ols-oracle", criterion_ols_oracle},
      {9, "policy-learning-demo", criterion_policy_demo},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  gbps::log::set_level(gbps::log::Level::quiet);
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  for (const auto& criterion : criteria()) {
    if (only != 0 && criterion.number != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %-32s %s  %s (%.1f s)\n", criterion.number, criterion.name,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures;
}
