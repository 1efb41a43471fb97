#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gbps/experts.hpp"
#include "gbps/market_data.hpp"
#include "gbps/particle_filter.hpp"

namespace gbps {

/// Monthly rebalancing experiment: experts are refit each month, the dynamic
/// posterior over ensemble weights is updated, and the resulting allocation
/// is scored on that month's realized returns.
struct BacktestConfig {
  /// First month of usable history. The filter warms up on months in
  /// (train_start, train_end] once expert windows are covered; months in
  /// (train_end, test_end] are recorded.
  YearMonth train_start;
  YearMonth train_end;
  YearMonth test_end;

  ExpertBankConfig experts = default_expert_config();
  EvolutionConfig evolution;
  std::size_t particles = 5000;
  double lambda = 1.0;
  double prior_alpha = 1.0;
  std::uint64_t seed = 42;
  /// Include per-expert, equal-weight and uniform-asset baselines in the
  /// report (computed from the same expert outputs as the GBPS path).
  bool baselines = true;

  static ExpertBankConfig default_expert_config() {
    ExpertBankConfig cfg;
    cfg.singular_fallback_to_mean = true;  // constant fixtures must run end to end
    return cfg;
  }
};

struct PeriodRecord {
  YearMonth date;
  std::vector<double> theta;            // decision weights (filtering mean)
  std::vector<double> realized_losses;  // z_{t,j} = -expert j's period return
  double gbps_return = 0.0;
  std::vector<double> expert_returns;
  double equal_weight_return = 0.0;
  double uniform_assets_return = 0.0;
  double ess = 0.0;
  bool resampled = false;
};

struct BacktestReport {
  std::vector<std::string> expert_ids;
  std::vector<PeriodRecord> records;
  bool baselines = true;

  /// "gbps", then expert ids, then "equal_weight", "uniform_assets"
  /// (baselines only when enabled).
  std::vector<std::string> strategy_names() const;

  /// Period returns of one strategy, in record order.
  std::vector<double> period_returns(const std::string& strategy) const;

  /// Cumulative returns prod_{s<=t}(1 + r_s) - 1 of one strategy.
  std::vector<double> cumulative_returns(const std::string& strategy) const;
};

/// Runs the monthly loop over the configured range. Errors from data or
/// expert fitting carry the offending month.
BacktestReport run_backtest(const ReturnTable& returns, const BacktestConfig& config);

/// Writes cumulative.csv, weights.csv and diagnostics.csv into out_dir
/// (created if missing). Output is byte-deterministic for a fixed report.
void emit_report(const BacktestReport& report, const std::filesystem::path& out_dir);

}  // namespace gbps
