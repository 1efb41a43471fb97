/* C interface to the GBPS decision engine.
 *
 * Conventions:
 *   - Opaque handles; every *_create / load call pairs with a *_destroy.
 *   - Fallible functions return GBPS_OK, GBPS_ERR_VALIDATION (bad input or
 *     configuration) or GBPS_ERR_RUNTIME, matching the CLI exit codes.
 *   - On failure, *errptr (when non-NULL) receives a malloc'd string of the
 *     form "<code>: <message>", e.g. "io: cannot open 'prices.csv'".
 *     Release it with gbps_string_free.
 */

#ifndef GBPS_C_API_H_
#define GBPS_C_API_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  GBPS_OK = 0,
  GBPS_ERR_VALIDATION = 1,
  GBPS_ERR_RUNTIME = 2
};

typedef struct gbps_returns_t gbps_returns_t;       /* dated K-asset return table */
typedef struct gbps_synth_spec_t gbps_synth_spec_t; /* synthetic market description */
typedef struct gbps_backtest_config_t gbps_backtest_config_t;
typedef struct gbps_backtest_report_t gbps_backtest_report_t;
typedef struct gbps_ensemble_t gbps_ensemble_t; /* loss-predictive ensemble */
typedef struct gbps_posterior_t gbps_posterior_t;
typedef struct gbps_demo_config_t gbps_demo_config_t;

const char* gbps_version(void);

/* "quiet", "info" or "debug"; anything else falls back to "info". */
void gbps_set_log_level(const char* level);

/* Frees strings returned through errptr. */
void gbps_string_free(char* s);

/* ---- return tables ---------------------------------------------------- */

/* Loads a monthly price CSV (header `date,<asset1>,...`) and converts it to
 * simple returns. */
int gbps_returns_from_prices_csv(const char* path, gbps_returns_t** out, char** errptr);

/* Loads a return CSV with the same header contract. */
int gbps_returns_from_csv(const char* path, gbps_returns_t** out, char** errptr);

int gbps_returns_write_csv(const gbps_returns_t* table, const char* path, char** errptr);

/* Writes the compounded price path (base_price one month before the first
 * return date). */
int gbps_returns_write_prices_csv(const gbps_returns_t* table, const char* path,
                                  double base_price, char** errptr);

int gbps_returns_rows(const gbps_returns_t* table);
int gbps_returns_assets(const gbps_returns_t* table);
void gbps_returns_destroy(gbps_returns_t* table);

/* ---- synthetic markets ------------------------------------------------ */

gbps_synth_spec_t* gbps_synth_spec_create(int months);
int gbps_synth_spec_set_start(gbps_synth_spec_t* spec, const char* year_month, char** errptr);
int gbps_synth_spec_set_assets(gbps_synth_spec_t* spec, const char* const* labels, int count,
                               char** errptr);

/* Appends a regime segment starting at 1-based month `start_month` with one
 * mean and volatility per asset. Segments must cover [1, months] in order. */
int gbps_synth_spec_add_regime(gbps_synth_spec_t* spec, int start_month, const double* means,
                               const double* vols, int count, char** errptr);

int gbps_synth_generate(const gbps_synth_spec_t* spec, uint64_t seed, gbps_returns_t** out,
                        char** errptr);
void gbps_synth_spec_destroy(gbps_synth_spec_t* spec);

/* ---- backtests --------------------------------------------------------- */

gbps_backtest_config_t* gbps_backtest_config_create(void);

/* Applies one `key = value` setting. Keys mirror the CLI config grammar:
 *   seed, lambda, discount, jitter, particles, resample_threshold,
 *   temperature, prior_alpha, train_start, train_end, test_end, experts,
 *   ar_fallback, baselines.
 * Unknown keys fail with a message listing the valid ones. */
int gbps_backtest_config_set(gbps_backtest_config_t* config, const char* key, const char* value,
                             char** errptr);
void gbps_backtest_config_destroy(gbps_backtest_config_t* config);

int gbps_backtest_run(const gbps_returns_t* returns, const gbps_backtest_config_t* config,
                      gbps_backtest_report_t** out, char** errptr);

/* Writes cumulative.csv, weights.csv, diagnostics.csv into out_dir. */
int gbps_backtest_report_write(const gbps_backtest_report_t* report, const char* out_dir,
                               char** errptr);

int gbps_backtest_report_periods(const gbps_backtest_report_t* report);

/* Final cumulative return of a strategy ("gbps", an expert id,
 * "equal_weight", "uniform_assets"); NaN when the name is unknown. */
double gbps_backtest_report_final_return(const gbps_backtest_report_t* report,
                                         const char* strategy);
void gbps_backtest_report_destroy(gbps_backtest_report_t* report);

/* ---- static posterior -------------------------------------------------- */

gbps_ensemble_t* gbps_ensemble_create(void);
int gbps_ensemble_add_gaussian(gbps_ensemble_t* ensemble, double mean, double variance,
                               char** errptr);
int gbps_ensemble_add_empirical(gbps_ensemble_t* ensemble, const double* samples, int count,
                                char** errptr);
int gbps_ensemble_size(const gbps_ensemble_t* ensemble);
void gbps_ensemble_destroy(gbps_ensemble_t* ensemble);

/* Metropolis sampling of the posterior over ensemble weights. prior_alpha is
 * the symmetric Dirichlet concentration. */
int gbps_posterior_sample(const gbps_ensemble_t* ensemble, double prior_alpha, double lambda,
                          int n_samples, int burn_in, uint64_t seed, gbps_posterior_t** out,
                          char** errptr);

int gbps_posterior_size(const gbps_posterior_t* posterior);
int gbps_posterior_mean(const gbps_posterior_t* posterior, double* out, int len, char** errptr);
int gbps_posterior_stddev(const gbps_posterior_t* posterior, double* out, int len, char** errptr);
double gbps_posterior_acceptance_rate(const gbps_posterior_t* posterior);
int gbps_posterior_degenerate(const gbps_posterior_t* posterior);
void gbps_posterior_destroy(gbps_posterior_t* posterior);

/* ---- policy-learning demo ---------------------------------------------- */

gbps_demo_config_t* gbps_demo_config_create(void);

/* Keys: treatments, observations, arm_means, arm_slopes, propensities,
 * outcome_noise, oracle, ipw_bias, temperature, lambda, bootstrap, samples,
 * burn_in, seed. List values are comma-separated. */
int gbps_demo_config_set(gbps_demo_config_t* config, const char* key, const char* value,
                         char** errptr);
void gbps_demo_config_destroy(gbps_demo_config_t* config);

/* Runs the demo and writes demo_summary.csv / demo_policies.csv to out_dir. */
int gbps_demo_run(const gbps_demo_config_t* config, const char* out_dir, char** errptr);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GBPS_C_API_H_ */
