#include "gbps/backtest.hpp"

#include <algorithm>
#include <fstream>

#include "gbps/errors.hpp"
#include "gbps/log.hpp"
#include "gbps/static_posterior.hpp"
#include "gbps/detail/text.hpp"

namespace gbps {

std::vector<std::string> BacktestReport::strategy_names() const {
  std::vector<std::string> names{"gbps"};
  if (baselines) {
    names.insert(names.end(), expert_ids.begin(), expert_ids.end());
    names.push_back("equal_weight");
    names.push_back("uniform_assets");
  }
  return names;
}

std::vector<double> BacktestReport::period_returns(const std::string& strategy) const {
  std::vector<double> out;
  out.reserve(records.size());
  const auto expert_it = std::find(expert_ids.begin(), expert_ids.end(), strategy);
  for (const auto& rec : records) {
    if (strategy == "gbps") {
      out.push_back(rec.gbps_return);
    } else if (strategy == "equal_weight") {
      out.push_back(rec.equal_weight_return);
    } else if (strategy == "uniform_assets") {
      out.push_back(rec.uniform_assets_return);
    } else if (expert_it != expert_ids.end()) {
      out.push_back(rec.expert_returns[static_cast<std::size_t>(expert_it - expert_ids.begin())]);
    } else {
      fail_validation("validation", "unknown strategy " + detail::quoted(strategy));
    }
  }
  return out;
}

std::vector<double> BacktestReport::cumulative_returns(const std::string& strategy) const {
  std::vector<double> out = period_returns(strategy);
  double level = 1.0;
  for (double& r : out) {
    level *= 1.0 + r;
    r = level - 1.0;
  }
  return out;
}

BacktestReport run_backtest(const ReturnTable& returns, const BacktestConfig& config) {
  if (!(config.train_start < config.train_end && config.train_end < config.test_end)) {
    fail_validation("validation", "need train_start < train_end < test_end, got " +
                                      config.train_start.str() + " / " + config.train_end.str() +
                                      " / " + config.test_end.str());
  }
  if (returns.rows() == 0) fail_validation("validation", "empty return table");
  if (config.train_start < returns.dates.front() || returns.dates.back() < config.test_end) {
    fail_validation("validation", "table covers [" + returns.dates.front().str() + ", " +
                                      returns.dates.back().str() + "] but the backtest needs [" +
                                      config.train_start.str() + ", " + config.test_end.str() + "]");
  }
  const int required = config.experts.required_history();
  const int train_months = months_between(config.train_start, config.train_end) + 1;
  if (train_months < required) {
    fail_validation("validation", "train window has " + std::to_string(train_months) +
                                      " months but the longest expert needs " +
                                      std::to_string(required));
  }
  if (config.particles < 2) fail_validation("validation", "need at least two particles");

  // Work on the configured slice so history never reaches before train_start.
  const int total_months = months_between(config.train_start, config.test_end) + 1;
  ReturnTable table = window(returns, config.test_end.plus_months(1), total_months);

  const std::size_t j_experts = config.experts.experts.size();
  Rng rng(config.seed);
  const std::vector<double> alpha(j_experts, config.prior_alpha);
  ParticleCloud cloud = init_particles(j_experts, config.particles, alpha, rng);

  BacktestReport report;
  report.baselines = config.baselines;
  for (const auto& spec : config.experts.experts) report.expert_ids.push_back(spec.id());

  const auto first_decision = static_cast<std::size_t>(required);
  for (std::size_t t = first_decision; t < table.rows(); ++t) {
    const YearMonth date = table.dates[t];
    try {
      const auto bank = build_expert_bank(table, t, config.experts);

      std::vector<LossPredictive> predictives;
      std::vector<SimplexWeights> policy_rows;
      predictives.reserve(j_experts);
      policy_rows.reserve(j_experts);
      for (const auto& f : bank) {
        predictives.push_back(
            LossPredictive::gaussian(f.loss_predictive.mean, f.loss_predictive.variance));
        policy_rows.push_back(f.policy);
      }
      const PredictiveEnsemble ensemble{std::move(predictives)};
      const PolicyMatrix policies{std::move(policy_rows)};

      // Decision weights use predictives through t (fit on data before t);
      // period-t returns only score the decision afterwards.
      StepResult stepped = step(std::move(cloud), ensemble, config.evolution, config.lambda, rng);
      cloud = std::move(stepped.cloud);
      const SimplexWeights theta = stepped.summary.posterior_mean;
      const SimplexWeights mixture = ensemble_policy(theta, policies);

      if (config.train_end < date) {
        PeriodRecord rec;
        rec.date = date;
        rec.theta.assign(theta.begin(), theta.end());
        rec.ess = stepped.summary.ess;
        rec.resampled = stepped.summary.resampled;

        const auto market = table.row(t);
        double gbps_return = 0.0;
        for (std::size_t a = 0; a < market.size(); ++a) gbps_return += mixture[a] * market[a];
        rec.gbps_return = gbps_return;

        rec.expert_returns.resize(j_experts);
        rec.realized_losses.resize(j_experts);
        double equal_weight = 0.0;
        for (std::size_t j = 0; j < j_experts; ++j) {
          double expert_return = 0.0;
          for (std::size_t a = 0; a < market.size(); ++a) {
            expert_return += policies.row(j)[a] * market[a];
          }
          rec.expert_returns[j] = expert_return;
          rec.realized_losses[j] = -expert_return;
          equal_weight += expert_return / static_cast<double>(j_experts);
        }
        rec.equal_weight_return = equal_weight;

        double uniform = 0.0;
        for (double r : market) uniform += r / static_cast<double>(market.size());
        rec.uniform_assets_return = uniform;

        report.records.push_back(std::move(rec));
      }
    } catch (const Error& e) {
      throw Error(e.kind(), e.code(), "at " + date.str() + ": " + e.what());
    }
  }

  if (report.records.empty()) {
    fail_validation("validation", "no test months: the first feasible decision month is " +
                                      table.dates[std::min<std::size_t>(first_decision,
                                                                        table.rows() - 1)]
                                          .str());
  }
  log::info("backtest: " + std::to_string(report.records.size()) + " test months, " +
            std::to_string(j_experts) + " experts, " + std::to_string(config.particles) +
            " particles");
  return report;
}

namespace {

std::ofstream open_report_file(const std::filesystem::path& dir, const char* name) {
  const auto path = dir / name;
  std::ofstream out(path);
  if (!out) fail_validation("io", "cannot write " + detail::quoted(path.string()));
  return out;
}

}  // namespace

void emit_report(const BacktestReport& report, const std::filesystem::path& out_dir) {
  if (report.records.empty()) fail_validation("validation", "cannot emit an empty report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail_validation("io", "cannot create directory " + detail::quoted(out_dir.string()));

  {
    auto out = open_report_file(out_dir, "cumulative.csv");
    out << "date";
    const auto strategies = report.strategy_names();
    for (const auto& s : strategies) out << ',' << s;
    out << '\n';
    std::vector<std::vector<double>> series;
    series.reserve(strategies.size());
    for (const auto& s : strategies) series.push_back(report.cumulative_returns(s));
    for (std::size_t t = 0; t < report.records.size(); ++t) {
      out << report.records[t].date.str();
      for (const auto& col : series) out << ',' << detail::format_g12(col[t]);
      out << '\n';
    }
  }
  {
    auto out = open_report_file(out_dir, "weights.csv");
    out << "date";
    for (const auto& id : report.expert_ids) out << ',' << id;
    out << '\n';
    for (const auto& rec : report.records) {
      out << rec.date.str();
      for (double w : rec.theta) out << ',' << detail::format_g12(w);
      out << '\n';
    }
  }
  {
    auto out = open_report_file(out_dir, "diagnostics.csv");
    out << "date,ess,resampled\n";
    for (const auto& rec : report.records) {
      out << rec.date.str() << ',' << detail::format_g12(rec.ess) << ',' << (rec.resampled ? 1 : 0)
          << '\n';
    }
  }
}

}  // namespace gbps
