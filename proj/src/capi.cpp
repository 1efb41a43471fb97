#include "gbps.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "gbps/backtest.hpp"
#include "gbps/errors.hpp"
#include "gbps/log.hpp"
#include "gbps/market_data.hpp"
#include "gbps/policy_demo.hpp"
#include "gbps/predictive.hpp"
#include "gbps/static_posterior.hpp"

using gbps::Error;
using gbps::ErrorKind;

struct gbps_returns_t {
  gbps::ReturnTable table;
};

struct gbps_synth_spec_t {
  int months = 0;
  gbps::YearMonth start{2000, 1};
  std::vector<std::string> assets;
  std::vector<gbps::RegimeSegment> regimes;
};

struct gbps_backtest_config_t {
  gbps::BacktestConfig config;
  bool train_start_set = false, train_end_set = false, test_end_set = false;
};

struct gbps_backtest_report_t {
  gbps::BacktestReport report;
};

struct gbps_ensemble_t {
  std::vector<gbps::LossPredictive> experts;
};

struct gbps_posterior_t {
  gbps::PosteriorSample sample;
};

struct gbps_demo_config_t {
  gbps::DemoConfig config;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_error(char** errptr, const std::string& code, const std::string& message) {
  if (errptr != nullptr) *errptr = dup_string(code + ": " + message);
}

// Runs `fn` and converts exceptions to return codes / error strings.
template <typename Fn>
int guarded(char** errptr, Fn&& fn) {
  try {
    fn();
    return GBPS_OK;
  } catch (const Error& e) {
    set_error(errptr, e.code(), e.what());
    return e.kind() == ErrorKind::validation ? GBPS_ERR_VALIDATION : GBPS_ERR_RUNTIME;
  } catch (const std::exception& e) {
    set_error(errptr, "runtime", e.what());
    return GBPS_ERR_RUNTIME;
  }
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  gbps::fail_validation("config", "key '" + key + "': cannot parse '" + value + "' as " + expected);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out)) bad_value(key, value, "a number");
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), last, out);
  if (ec != std::errc() || ptr != last) bad_value(key, value, "an integer");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), last, out);
  if (ec != std::errc() || ptr != last) bad_value(key, value, "a non-negative integer");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  bad_value(key, value, "on/off");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::size_t begin = 0;
  while (begin <= value.size()) {
    const std::size_t end = value.find(',', begin);
    const std::string item = value.substr(begin, end == std::string::npos ? end : end - begin);
    items.push_back(item);
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  return items;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_double(key, item));
  return out;
}

// "mean:<window>" or "ar:<order>[:<window>]", comma separated.
std::vector<gbps::ExpertSpec> parse_expert_list(const std::string& key, const std::string& value) {
  std::vector<gbps::ExpertSpec> specs;
  for (const auto& item : split_list(value)) {
    std::vector<std::string> parts;
    std::size_t begin = 0;
    while (begin <= item.size()) {
      const std::size_t end = item.find(':', begin);
      parts.push_back(item.substr(begin, end == std::string::npos ? end : end - begin));
      if (end == std::string::npos) break;
      begin = end + 1;
    }
    if (parts.size() == 2 && parts[0] == "mean") {
      specs.push_back(gbps::ExpertSpec::sample_mean(static_cast<int>(parse_int(key, parts[1]))));
    } else if ((parts.size() == 2 || parts.size() == 3) && parts[0] == "ar") {
      const int order = static_cast<int>(parse_int(key, parts[1]));
      const int window = parts.size() == 3 ? static_cast<int>(parse_int(key, parts[2])) : 36;
      specs.push_back(gbps::ExpertSpec::autoregressive(order, window));
    } else {
      bad_value(key, item, "'mean:<window>' or 'ar:<order>[:<window>]'");
    }
  }
  if (specs.empty()) bad_value(key, value, "a non-empty expert list");
  return specs;
}

void apply_backtest_key(gbps_backtest_config_t& cfg, const std::string& key,
                        const std::string& value) {
  auto& c = cfg.config;
  if (key == "seed") {
    c.seed = parse_u64(key, value);
  } else if (key == "lambda") {
    c.lambda = parse_double(key, value);
    if (!(c.lambda > 0.0)) gbps::fail_validation("config", "lambda must be positive");
  } else if (key == "discount") {
    c.evolution.discount = parse_double(key, value);
    if (!(c.evolution.discount > 0.0) || c.evolution.discount > 1.0) {
      gbps::fail_validation("config", "discount must lie in (0, 1], got " + value);
    }
  } else if (key == "jitter") {
    c.evolution.jitter = parse_double(key, value);
    if (c.evolution.jitter < 0.0) gbps::fail_validation("config", "jitter must be >= 0");
  } else if (key == "particles") {
    const long long n = parse_int(key, value);
    if (n < 2) gbps::fail_validation("config", "particles must be >= 2");
    c.particles = static_cast<std::size_t>(n);
  } else if (key == "resample_threshold") {
    c.evolution.resample_threshold = parse_double(key, value);
    if (!(c.evolution.resample_threshold > 0.0) || c.evolution.resample_threshold > 1.0) {
      gbps::fail_validation("config", "resample_threshold must lie in (0, 1]");
    }
  } else if (key == "temperature") {
    c.experts.softmax_temperature = parse_double(key, value);
    if (!(c.experts.softmax_temperature > 0.0)) {
      gbps::fail_validation("config", "temperature must be positive");
    }
  } else if (key == "prior_alpha") {
    c.prior_alpha = parse_double(key, value);
    if (!(c.prior_alpha > 0.0)) gbps::fail_validation("config", "prior_alpha must be positive");
  } else if (key == "train_start") {
    c.train_start = gbps::YearMonth::parse(value);
    cfg.train_start_set = true;
  } else if (key == "train_end") {
    c.train_end = gbps::YearMonth::parse(value);
    cfg.train_end_set = true;
  } else if (key == "test_end") {
    c.test_end = gbps::YearMonth::parse(value);
    cfg.test_end_set = true;
  } else if (key == "experts") {
    c.experts.experts = parse_expert_list(key, value);
  } else if (key == "ar_fallback") {
    c.experts.singular_fallback_to_mean = parse_bool(key, value);
  } else if (key == "baselines") {
    c.baselines = parse_bool(key, value);
  } else {
    gbps::fail_validation("config",
                          "unknown backtest key '" + key +
                              "'; valid keys: seed, lambda, discount, jitter, particles, "
                              "resample_threshold, temperature, prior_alpha, train_start, "
                              "train_end, test_end, experts, ar_fallback, baselines");
  }
}

void copy_stats(const std::vector<double>& values, double* out, int len) {
  if (out == nullptr || len < 0 || static_cast<std::size_t>(len) < values.size()) {
    gbps::fail_validation("validation", "output buffer holds " + std::to_string(len) +
                                            " entries but " + std::to_string(values.size()) +
                                            " are needed");
  }
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i];
}

void apply_demo_key(gbps::DemoConfig& c, const std::string& key, const std::string& value) {
  if (key == "treatments") {
    c.treatments = static_cast<int>(parse_int(key, value));
  } else if (key == "observations") {
    c.samples = static_cast<int>(parse_int(key, value));
  } else if (key == "arm_means") {
    c.arm_means = parse_double_list(key, value);
  } else if (key == "arm_slopes") {
    c.arm_slopes = parse_double_list(key, value);
  } else if (key == "propensities") {
    c.propensities = parse_double_list(key, value);
  } else if (key == "outcome_noise") {
    c.outcome_noise = parse_double(key, value);
    if (c.outcome_noise < 0.0) gbps::fail_validation("config", "outcome_noise must be >= 0");
  } else if (key == "oracle") {
    c.oracle_experts = parse_bool(key, value);
  } else if (key == "ipw_bias") {
    c.ipw_loss_bias = parse_double(key, value);
  } else if (key == "temperature") {
    c.softmax_temperature = parse_double(key, value);
    if (!(c.softmax_temperature > 0.0)) gbps::fail_validation("config", "temperature must be positive");
  } else if (key == "lambda") {
    c.lambda = parse_double(key, value);
    if (!(c.lambda > 0.0)) gbps::fail_validation("config", "lambda must be positive");
  } else if (key == "bootstrap") {
    c.bootstrap_rounds = static_cast<int>(parse_int(key, value));
  } else if (key == "samples") {
    c.posterior_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "burn_in") {
    c.posterior_burn_in = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    c.seed = parse_u64(key, value);
  } else {
    gbps::fail_validation("config",
                          "unknown demo key '" + key +
                              "'; valid keys: treatments, observations, arm_means, arm_slopes, "
                              "propensities, outcome_noise, oracle, ipw_bias, temperature, "
                              "lambda, bootstrap, samples, burn_in, seed");
  }
}

}  // namespace

extern "C" {

const char* gbps_version(void) { return "0.1.0"; }

void gbps_set_log_level(const char* level) {
  gbps::log::set_level(gbps::log::parse_level(level != nullptr ? level : "info"));
}

void gbps_string_free(char* s) { std::free(s); }

int gbps_returns_from_prices_csv(const char* path, gbps_returns_t** out, char** errptr) {
  return guarded(errptr, [&] {
    auto prices = gbps::load_prices_csv(path != nullptr ? path : "");
    *out = new gbps_returns_t{gbps::to_returns(prices)};
  });
}

int gbps_returns_from_csv(const char* path, gbps_returns_t** out, char** errptr) {
  return guarded(errptr, [&] {
    *out = new gbps_returns_t{gbps::load_returns_csv(path != nullptr ? path : "")};
  });
}

int gbps_returns_write_csv(const gbps_returns_t* table, const char* path, char** errptr) {
  return guarded(errptr, [&] { gbps::write_returns_csv(table->table, path); });
}

int gbps_returns_write_prices_csv(const gbps_returns_t* table, const char* path, double base_price,
                                  char** errptr) {
  return guarded(errptr,
                 [&] { gbps::write_prices_csv(gbps::to_prices(table->table, base_price), path); });
}

int gbps_returns_rows(const gbps_returns_t* table) {
  return table == nullptr ? 0 : static_cast<int>(table->table.rows());
}

int gbps_returns_assets(const gbps_returns_t* table) {
  return table == nullptr ? 0 : static_cast<int>(table->table.cols());
}

void gbps_returns_destroy(gbps_returns_t* table) { delete table; }

gbps_synth_spec_t* gbps_synth_spec_create(int months) {
  auto* spec = new gbps_synth_spec_t;
  spec->months = months;
  return spec;
}

int gbps_synth_spec_set_start(gbps_synth_spec_t* spec, const char* year_month, char** errptr) {
  return guarded(errptr, [&] { spec->start = gbps::YearMonth::parse(year_month); });
}

int gbps_synth_spec_set_assets(gbps_synth_spec_t* spec, const char* const* labels, int count,
                               char** errptr) {
  return guarded(errptr, [&] {
    if (count < 1) gbps::fail_validation("validation", "need at least one asset label");
    spec->assets.assign(labels, labels + count);
  });
}

int gbps_synth_spec_add_regime(gbps_synth_spec_t* spec, int start_month, const double* means,
                               const double* vols, int count, char** errptr) {
  return guarded(errptr, [&] {
    if (count < 1) gbps::fail_validation("validation", "regime needs at least one asset column");
    gbps::RegimeSegment seg;
    seg.start_month = start_month;
    seg.means.assign(means, means + count);
    seg.vols.assign(vols, vols + count);
    spec->regimes.push_back(std::move(seg));
  });
}

int gbps_synth_generate(const gbps_synth_spec_t* spec, uint64_t seed, gbps_returns_t** out,
                        char** errptr) {
  return guarded(errptr, [&] {
    std::vector<std::string> assets = spec->assets;
    if (assets.empty()) {
      const std::size_t k = spec->regimes.empty() ? 0 : spec->regimes.front().means.size();
      for (std::size_t i = 0; i < k; ++i) assets.push_back("A" + std::to_string(i + 1));
    }
    *out = new gbps_returns_t{
        gbps::generate_synthetic(std::move(assets), spec->months, spec->start, spec->regimes, seed)};
  });
}

void gbps_synth_spec_destroy(gbps_synth_spec_t* spec) { delete spec; }

gbps_backtest_config_t* gbps_backtest_config_create(void) { return new gbps_backtest_config_t; }

int gbps_backtest_config_set(gbps_backtest_config_t* config, const char* key, const char* value,
                             char** errptr) {
  return guarded(errptr, [&] {
    if (key == nullptr || value == nullptr) {
      gbps::fail_validation("config", "config key and value must be non-null");
    }
    apply_backtest_key(*config, key, value);
  });
}

void gbps_backtest_config_destroy(gbps_backtest_config_t* config) { delete config; }

int gbps_backtest_run(const gbps_returns_t* returns, const gbps_backtest_config_t* config,
                      gbps_backtest_report_t** out, char** errptr) {
  return guarded(errptr, [&] {
    gbps::BacktestConfig resolved = config->config;
    const auto& table = returns->table;
    // Unset date bounds default to the tightest legal split on this table.
    if (!config->train_start_set) resolved.train_start = table.dates.front();
    if (!config->test_end_set) resolved.test_end = table.dates.back();
    if (!config->train_end_set) {
      resolved.train_end =
          resolved.train_start.plus_months(resolved.experts.required_history() - 1);
    }
    *out = new gbps_backtest_report_t{gbps::run_backtest(table, resolved)};
  });
}

int gbps_backtest_report_write(const gbps_backtest_report_t* report, const char* out_dir,
                               char** errptr) {
  return guarded(errptr, [&] { gbps::emit_report(report->report, out_dir); });
}

int gbps_backtest_report_periods(const gbps_backtest_report_t* report) {
  return report == nullptr ? 0 : static_cast<int>(report->report.records.size());
}

double gbps_backtest_report_final_return(const gbps_backtest_report_t* report,
                                         const char* strategy) {
  try {
    return report->report.cumulative_returns(strategy).back();
  } catch (...) {
    return std::nan("");
  }
}

void gbps_backtest_report_destroy(gbps_backtest_report_t* report) { delete report; }

gbps_ensemble_t* gbps_ensemble_create(void) { return new gbps_ensemble_t; }

int gbps_ensemble_add_gaussian(gbps_ensemble_t* ensemble, double mean, double variance,
                               char** errptr) {
  return guarded(errptr,
                 [&] { ensemble->experts.push_back(gbps::LossPredictive::gaussian(mean, variance)); });
}

int gbps_ensemble_add_empirical(gbps_ensemble_t* ensemble, const double* samples, int count,
                                char** errptr) {
  return guarded(errptr, [&] {
    if (count < 1) gbps::fail_validation("validation", "empirical expert needs at least one sample");
    ensemble->experts.push_back(
        gbps::LossPredictive::empirical(std::vector<double>(samples, samples + count)));
  });
}

int gbps_ensemble_size(const gbps_ensemble_t* ensemble) {
  return ensemble == nullptr ? 0 : static_cast<int>(ensemble->experts.size());
}

void gbps_ensemble_destroy(gbps_ensemble_t* ensemble) { delete ensemble; }

int gbps_posterior_sample(const gbps_ensemble_t* ensemble, double prior_alpha, double lambda,
                          int n_samples, int burn_in, uint64_t seed, gbps_posterior_t** out,
                          char** errptr) {
  return guarded(errptr, [&] {
    gbps::PosteriorOptions options;
    options.n_samples = n_samples;
    options.burn_in = burn_in;
    options.lambda = lambda;
    if (!(prior_alpha > 0.0)) gbps::fail_validation("config", "prior_alpha must be positive");
    const std::vector<double> alpha(ensemble->experts.size(), prior_alpha);
    *out = new gbps_posterior_t{gbps::sample_posterior(gbps::PredictiveEnsemble{ensemble->experts},
                                                       alpha, options, seed)};
  });
}

int gbps_posterior_size(const gbps_posterior_t* posterior) {
  return posterior == nullptr ? 0 : static_cast<int>(posterior->sample.draws.size());
}

int gbps_posterior_mean(const gbps_posterior_t* posterior, double* out, int len, char** errptr) {
  return guarded(errptr, [&] {
    const auto mean = gbps::posterior_mean(posterior->sample);
    copy_stats({mean.begin(), mean.end()}, out, len);
  });
}

int gbps_posterior_stddev(const gbps_posterior_t* posterior, double* out, int len, char** errptr) {
  return guarded(errptr, [&] { copy_stats(gbps::posterior_stddev(posterior->sample), out, len); });
}

double gbps_posterior_acceptance_rate(const gbps_posterior_t* posterior) {
  return posterior == nullptr ? 0.0 : posterior->sample.acceptance_rate;
}

int gbps_posterior_degenerate(const gbps_posterior_t* posterior) {
  return posterior != nullptr && posterior->sample.degenerate_chain ? 1 : 0;
}

void gbps_posterior_destroy(gbps_posterior_t* posterior) { delete posterior; }

gbps_demo_config_t* gbps_demo_config_create(void) { return new gbps_demo_config_t; }

int gbps_demo_config_set(gbps_demo_config_t* config, const char* key, const char* value,
                         char** errptr) {
  return guarded(errptr, [&] {
    if (key == nullptr || value == nullptr) {
      gbps::fail_validation("config", "config key and value must be non-null");
    }
    apply_demo_key(config->config, key, value);
  });
}

void gbps_demo_config_destroy(gbps_demo_config_t* config) { delete config; }

int gbps_demo_run(const gbps_demo_config_t* config, const char* out_dir, char** errptr) {
  return guarded(errptr, [&] {
    const gbps::DemoReport report = gbps::policy_learning_demo(config->config);
    gbps::write_demo_report(report, out_dir != nullptr ? out_dir : ".");
  });
}

}  // extern "C"
