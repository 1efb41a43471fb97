// gbps command line: wires config files, flags, data and the engine
// (through the C API) into reproducible report directories.
//
// Subcommands:
//   backtest     price CSV -> cumulative/weights/diagnostics CSVs
//   posterior    ensemble spec CSV -> posterior summary CSV
//   synth        regime spec -> synthetic return (and price) CSV
//   demo-policy  demo spec -> policy-learning demo report
//
// Every run writes a run_manifest.txt with the resolved configuration, the
// seed and input-file digests; rerunning with `--config run_manifest.txt`
// reproduces the outputs byte for byte.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gbps.h"

namespace {

bool g_quiet = false;

void warn(const std::string& message) {
  if (!g_quiet) std::fprintf(stderr, "gbps: warning: %s\n", message.c_str());
}

// Thrown by CLI-side validation; code lands in the ERROR[<code>] line.
struct CliError {
  int exit_code;
  std::string code;
  std::string message;
};

[[noreturn]] void fail(int exit_code, const std::string& code, const std::string& message) {
  throw CliError{exit_code, code, message};
}

// Converts a C API failure (rc + "code: message" string) into CliError.
[[noreturn]] void fail_from_api(int rc, char* err) {
  std::string text = err != nullptr ? err : "unknown error";
  gbps_string_free(err);
  std::string code = "runtime";
  const auto sep = text.find(": ");
  if (sep != std::string::npos) {
    code = text.substr(0, sep);
    text = text.substr(sep + 2);
  }
  throw CliError{rc, code, text};
}

void check_api(int rc, char** errptr) {
  if (rc != GBPS_OK) fail_from_api(rc, *errptr);
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

double parse_cli_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(1, "config", "key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

long long parse_cli_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(1, "config", "key '" + key + "': cannot parse '" + value + "' as an integer");
  }
}

std::uint64_t parse_cli_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(1, "config", "key '" + key + "': cannot parse '" + value + "' as a non-negative integer");
  }
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(1, "io", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_digest(const std::string& path) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(read_file(path))));
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

// One `key = value` line of a config or spec file.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<ConfigEntry> parse_config_text(const std::string& text, const std::string& origin) {
  std::vector<ConfigEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(1, "config", origin + " line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    ConfigEntry entry{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (entry.key.empty()) {
      fail(1, "config", origin + " line " + std::to_string(line_no) + ": empty key");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<ConfigEntry> load_config_file(const std::string& path) {
  return parse_config_text(read_file(path), "'" + path + "'");
}

std::string join_keys(const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

// Resolved key -> value settings, in application order; later wins.
class Settings {
 public:
  explicit Settings(std::vector<std::string> valid_keys) : valid_keys_(std::move(valid_keys)) {}

  void set_default(const std::string& key, const std::string& value) {
    check_key(key, "default");
    values_[key] = value;
  }

  void set(const std::string& key, const std::string& value, const std::string& origin) {
    check_key(key, origin);
    values_[key] = value;
    explicit_.push_back(key);
  }

  // Flags win over configured values; a warning notes the override
  // (overriding a mere default is silent).
  void set_from_flag(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    const bool configured = std::find(explicit_.begin(), explicit_.end(), key) != explicit_.end();
    if (configured && it != values_.end() && it->second != value) {
      warn("flag --" + key + "=" + value + " overrides configured value '" + it->second + "'");
    }
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const { return values_.at(key); }

  const std::map<std::string, std::string>& all() const { return values_; }

 private:
  void check_key(const std::string& key, const std::string& origin) const {
    if (std::find(valid_keys_.begin(), valid_keys_.end(), key) == valid_keys_.end()) {
      fail(1, "config",
           origin + ": unknown key '" + key + "'; valid keys: " + join_keys(valid_keys_));
    }
  }

  std::vector<std::string> valid_keys_;
  std::vector<std::string> explicit_;          // keys set by spec/config files
  std::map<std::string, std::string> values_;  // sorted; manifests are stable
};

void write_manifest(const std::filesystem::path& out_dir, const std::string& subcommand,
                    const Settings& settings,
                    const std::vector<std::pair<std::string, std::string>>& input_digests) {
  const auto path = out_dir / "run_manifest.txt";
  std::ofstream out(path);
  if (!out) fail(1, "io", "cannot write '" + path.string() + "'");
  out << "# gbps run manifest\n";
  out << "# subcommand: " << subcommand << "\n";
  for (const auto& [name, digest] : input_digests) {
    out << "# digest " << name << ": " << digest << "\n";
  }
  for (const auto& [key, value] : settings.all()) {
    out << key << " = " << value << "\n";
  }
  if (!out.good()) fail(2, "io", "write failed for '" + path.string() + "'");
}

void ensure_out_dir(const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(1, "io", "cannot create directory '" + out_dir.string() + "'");
}

// ---- backtest ------------------------------------------------------------

const std::vector<std::string> kBacktestKeys = {
    "prices",        "seed",        "lambda",      "discount",  "jitter",
    "particles",     "resample_threshold", "temperature", "prior_alpha", "train_start",
    "train_end",     "test_end",    "experts",     "ar_fallback", "baselines"};

const std::vector<std::pair<std::string, std::string>> kBacktestDefaults = {
    {"seed", "42"},           {"lambda", "1"},
    {"discount", "0.95"},     {"jitter", "0.01"},
    {"particles", "5000"},    {"resample_threshold", "0.5"},
    {"temperature", "0.02"},  {"prior_alpha", "1"},
    {"experts", "mean:12,mean:36,ar:1,ar:2,ar:3"},
    {"ar_fallback", "on"},    {"baselines", "on"}};

int run_backtest_command(const Settings& settings, const std::filesystem::path& out_dir) {
  if (!settings.has("prices")) fail(1, "config", "backtest needs --prices or a 'prices' key");
  const std::string prices = settings.get("prices");

  char* err = nullptr;
  gbps_returns_t* returns = nullptr;
  check_api(gbps_returns_from_prices_csv(prices.c_str(), &returns, &err), &err);
  std::unique_ptr<gbps_returns_t, decltype(&gbps_returns_destroy)> returns_guard(
      returns, &gbps_returns_destroy);

  gbps_backtest_config_t* config = gbps_backtest_config_create();
  std::unique_ptr<gbps_backtest_config_t, decltype(&gbps_backtest_config_destroy)> config_guard(
      config, &gbps_backtest_config_destroy);
  for (const auto& [key, value] : settings.all()) {
    if (key == "prices") continue;
    check_api(gbps_backtest_config_set(config, key.c_str(), value.c_str(), &err), &err);
  }

  gbps_backtest_report_t* report = nullptr;
  check_api(gbps_backtest_run(returns, config, &report, &err), &err);
  std::unique_ptr<gbps_backtest_report_t, decltype(&gbps_backtest_report_destroy)> report_guard(
      report, &gbps_backtest_report_destroy);

  ensure_out_dir(out_dir);
  check_api(gbps_backtest_report_write(report, out_dir.string().c_str(), &err), &err);
  write_manifest(out_dir, "backtest", settings, {{"prices", file_digest(prices)}});
  return 0;
}

// ---- posterior -------------------------------------------------------------

const std::vector<std::string> kPosteriorKeys = {"ensemble", "seed",    "lambda",
                                                 "samples",  "burn_in", "prior_alpha"};

const std::vector<std::pair<std::string, std::string>> kPosteriorDefaults = {
    {"seed", "42"}, {"lambda", "1"}, {"samples", "5000"}, {"burn_in", "2000"}, {"prior_alpha", "1"}};

std::vector<std::string> split_csv_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_spec_number(const std::string& token, const std::string& origin, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(1, "parse", origin + " line " + std::to_string(line) + ": cannot parse number '" + token + "'");
  }
}

// Ensemble spec: `expert,mean,variance` rows (Gaussian) or `expert,sample`
// long form (empirical, grouped by label in first-appearance order).
struct EnsembleSpec {
  std::vector<std::string> labels;
  gbps_ensemble_t* ensemble = nullptr;
};

EnsembleSpec load_ensemble_spec(const std::string& path) {
  const std::string origin = "'" + path + "'";
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail(1, "parse", origin + ": empty ensemble spec");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const bool gaussian = line == "expert,mean,variance";
  if (!gaussian && line != "expert,sample") {
    fail(1, "parse", origin + ": header must be 'expert,mean,variance' or 'expert,sample'");
  }

  EnsembleSpec spec;
  spec.ensemble = gbps_ensemble_create();
  std::vector<std::pair<std::string, std::vector<double>>> groups;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_fields(line);
    if (gaussian) {
      if (fields.size() != 3) fail(1, "parse", origin + " line " + std::to_string(line_no) +
                                                   ": expected expert,mean,variance");
      for (const auto& l : spec.labels) {
        if (l == fields[0]) fail(1, "validation", origin + ": duplicate expert '" + fields[0] + "'");
      }
      spec.labels.push_back(fields[0]);
      char* err = nullptr;
      const double mean = parse_spec_number(fields[1], origin, line_no);
      const double variance = parse_spec_number(fields[2], origin, line_no);
      check_api(gbps_ensemble_add_gaussian(spec.ensemble, mean, variance, &err), &err);
    } else {
      if (fields.size() != 2) fail(1, "parse", origin + " line " + std::to_string(line_no) +
                                                   ": expected expert,sample");
      const double sample = parse_spec_number(fields[1], origin, line_no);
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const auto& g) { return g.first == fields[0]; });
      if (it == groups.end()) {
        groups.push_back({fields[0], {sample}});
      } else {
        it->second.push_back(sample);
      }
    }
  }
  if (!gaussian) {
    for (auto& [label, samples] : groups) {
      spec.labels.push_back(label);
      char* err = nullptr;
      check_api(gbps_ensemble_add_empirical(spec.ensemble, samples.data(),
                                            static_cast<int>(samples.size()), &err),
                &err);
    }
  }
  if (spec.labels.empty()) fail(1, "validation", origin + ": ensemble spec lists no experts");
  return spec;
}

int run_posterior_command(const Settings& settings, const std::filesystem::path& out_dir) {
  if (!settings.has("ensemble")) fail(1, "config", "posterior needs --ensemble or an 'ensemble' key");
  const std::string spec_path = settings.get("ensemble");

  EnsembleSpec spec = load_ensemble_spec(spec_path);
  std::unique_ptr<gbps_ensemble_t, decltype(&gbps_ensemble_destroy)> ensemble_guard(
      spec.ensemble, &gbps_ensemble_destroy);

  char* err = nullptr;
  gbps_posterior_t* posterior = nullptr;
  const int rc = gbps_posterior_sample(
      spec.ensemble, parse_cli_double("prior_alpha", settings.get("prior_alpha")),
      parse_cli_double("lambda", settings.get("lambda")),
      static_cast<int>(parse_cli_int("samples", settings.get("samples"))),
      static_cast<int>(parse_cli_int("burn_in", settings.get("burn_in"))),
      parse_cli_u64("seed", settings.get("seed")), &posterior, &err);
  check_api(rc, &err);
  std::unique_ptr<gbps_posterior_t, decltype(&gbps_posterior_destroy)> posterior_guard(
      posterior, &gbps_posterior_destroy);

  const auto j = static_cast<std::size_t>(gbps_ensemble_size(spec.ensemble));
  std::vector<double> mean(j), stddev(j);
  check_api(gbps_posterior_mean(posterior, mean.data(), static_cast<int>(j), &err), &err);
  check_api(gbps_posterior_stddev(posterior, stddev.data(), static_cast<int>(j), &err), &err);

  ensure_out_dir(out_dir);
  {
    const auto path = out_dir / "posterior.csv";
    std::ofstream out(path);
    if (!out) fail(1, "io", "cannot write '" + path.string() + "'");
    out << "expert,posterior_mean,posterior_stddev\n";
    for (std::size_t i = 0; i < j; ++i) {
      out << spec.labels[i] << ',' << format_double(mean[i]) << ',' << format_double(stddev[i])
          << '\n';
    }
  }
  {
    const auto path = out_dir / "posterior_diagnostics.csv";
    std::ofstream out(path);
    if (!out) fail(1, "io", "cannot write '" + path.string() + "'");
    out << "metric,value\n";
    out << "acceptance_rate," << format_double(gbps_posterior_acceptance_rate(posterior)) << '\n';
    out << "degenerate_chain," << gbps_posterior_degenerate(posterior) << '\n';
    out << "draws," << gbps_posterior_size(posterior) << '\n';
  }
  write_manifest(out_dir, "posterior", settings, {{"ensemble", file_digest(spec_path)}});
  return 0;
}

// ---- synth -----------------------------------------------------------------

const std::vector<std::string> kSynthKeys = {"spec", "seed"};
const std::vector<std::string> kSynthSpecKeys = {"months", "start", "assets", "regime", "seed"};

int run_synth_command(Settings& settings, const std::filesystem::path& out_dir) {
  if (!settings.has("spec")) fail(1, "config", "synth needs --spec or a 'spec' key");
  const std::string spec_path = settings.get("spec");

  int months = 0;
  std::string start = "2000-01";
  std::vector<std::string> assets;
  std::vector<std::vector<std::string>> regimes;  // start ; means ; vols
  std::optional<std::string> spec_seed;

  for (const auto& entry : load_config_file(spec_path)) {
    const std::string origin = "'" + spec_path + "' line " + std::to_string(entry.line);
    if (std::find(kSynthSpecKeys.begin(), kSynthSpecKeys.end(), entry.key) ==
        kSynthSpecKeys.end()) {
      fail(1, "config",
           origin + ": unknown key '" + entry.key + "'; valid keys: " + join_keys(kSynthSpecKeys));
    }
    if (entry.key == "months") {
      months = static_cast<int>(parse_spec_number(entry.value, origin, entry.line));
    } else if (entry.key == "start") {
      start = entry.value;
    } else if (entry.key == "assets") {
      for (const auto& label : split_csv_fields(entry.value)) {
        const std::string t = trim(label);
        if (t.empty()) fail(1, "config", origin + ": empty asset label");
        assets.push_back(t);
      }
    } else if (entry.key == "seed") {
      spec_seed = entry.value;
    } else {  // regime = <start> ; <comma means> ; <comma vols>
      std::vector<std::string> parts;
      std::stringstream ss(entry.value);
      std::string part;
      while (std::getline(ss, part, ';')) parts.push_back(trim(part));
      if (parts.size() != 3) {
        fail(1, "config", origin + ": regime must be '<start> ; <means> ; <vols>'");
      }
      regimes.push_back(std::move(parts));
    }
  }
  // Spec-file seed applies only when neither config nor flag set one.
  if (spec_seed && !settings.has("seed")) settings.set("seed", *spec_seed, "spec file");
  if (!settings.has("seed")) settings.set_default("seed", "42");

  if (months < 1) fail(1, "config", "'" + spec_path + "': months must be a positive integer");
  if (regimes.empty()) fail(1, "config", "'" + spec_path + "': at least one regime is required");

  gbps_synth_spec_t* spec = gbps_synth_spec_create(months);
  std::unique_ptr<gbps_synth_spec_t, decltype(&gbps_synth_spec_destroy)> spec_guard(
      spec, &gbps_synth_spec_destroy);
  char* err = nullptr;
  check_api(gbps_synth_spec_set_start(spec, start.c_str(), &err), &err);
  if (!assets.empty()) {
    std::vector<const char*> labels;
    for (const auto& a : assets) labels.push_back(a.c_str());
    check_api(gbps_synth_spec_set_assets(spec, labels.data(), static_cast<int>(labels.size()), &err),
              &err);
  }
  for (const auto& parts : regimes) {
    const int seg_start = static_cast<int>(parse_spec_number(parts[0], "regime", 0));
    std::vector<double> means, vols;
    for (const auto& tok : split_csv_fields(parts[1])) means.push_back(parse_spec_number(trim(tok), "regime means", 0));
    for (const auto& tok : split_csv_fields(parts[2])) vols.push_back(parse_spec_number(trim(tok), "regime vols", 0));
    if (means.size() != vols.size()) {
      fail(1, "config", "regime lists " + std::to_string(means.size()) + " means but " +
                            std::to_string(vols.size()) + " vols");
    }
    check_api(gbps_synth_spec_add_regime(spec, seg_start, means.data(), vols.data(),
                                         static_cast<int>(means.size()), &err),
              &err);
  }

  gbps_returns_t* returns = nullptr;
  check_api(gbps_synth_generate(spec, parse_cli_u64("seed", settings.get("seed")), &returns, &err),
            &err);
  std::unique_ptr<gbps_returns_t, decltype(&gbps_returns_destroy)> returns_guard(
      returns, &gbps_returns_destroy);

  ensure_out_dir(out_dir);
  check_api(gbps_returns_write_csv(returns, (out_dir / "returns.csv").string().c_str(), &err), &err);
  check_api(gbps_returns_write_prices_csv(returns, (out_dir / "prices.csv").string().c_str(), 100.0,
                                          &err),
            &err);
  write_manifest(out_dir, "synth", settings, {{"spec", file_digest(spec_path)}});
  return 0;
}

// ---- demo-policy -------------------------------------------------------------

const std::vector<std::string> kDemoKeys = {
    "spec",        "treatments", "observations", "arm_means", "arm_slopes",
    "propensities", "outcome_noise", "oracle",   "ipw_bias",  "temperature",
    "lambda",      "bootstrap",  "samples",      "burn_in",   "seed"};

const std::vector<std::pair<std::string, std::string>> kDemoDefaults = {
    {"treatments", "3"},   {"observations", "2000"}, {"outcome_noise", "0.25"},
    {"oracle", "off"},     {"ipw_bias", "0"},        {"temperature", "0.05"},
    {"lambda", "10"},      {"bootstrap", "200"},     {"samples", "5000"},
    {"burn_in", "2000"},   {"seed", "42"}};

int run_demo_command(const Settings& settings, const std::filesystem::path& out_dir) {
  gbps_demo_config_t* config = gbps_demo_config_create();
  std::unique_ptr<gbps_demo_config_t, decltype(&gbps_demo_config_destroy)> config_guard(
      config, &gbps_demo_config_destroy);
  char* err = nullptr;
  for (const auto& [key, value] : settings.all()) {
    if (key == "spec") continue;
    check_api(gbps_demo_config_set(config, key.c_str(), value.c_str(), &err), &err);
  }
  ensure_out_dir(out_dir);
  check_api(gbps_demo_run(config, out_dir.string().c_str(), &err), &err);

  std::vector<std::pair<std::string, std::string>> digests;
  if (settings.has("spec")) digests.push_back({"spec", file_digest(settings.get("spec"))});
  write_manifest(out_dir, "demo-policy", settings, digests);
  return 0;
}

// ---- wiring -----------------------------------------------------------------

struct CommonFlags {
  std::string out = ".";
  std::string config;
  std::map<std::string, std::string> values;  // flag name -> raw value
};

void add_value_flag(CLI::App* cmd, CommonFlags& flags, const std::string& name,
                    const std::string& description) {
  cmd->add_option_function<std::string>(
      "--" + name, [&flags, name](const std::string& v) { flags.values[name] = v; }, description);
}

Settings resolve_settings(const CommonFlags& flags, const std::vector<std::string>& valid_keys,
                          const std::vector<std::pair<std::string, std::string>>& defaults,
                          const std::vector<ConfigEntry>& spec_entries) {
  Settings settings(valid_keys);
  for (const auto& [key, value] : defaults) settings.set_default(key, value);
  for (const auto& entry : spec_entries) {
    settings.set(entry.key, entry.value, "spec line " + std::to_string(entry.line));
  }
  if (!flags.config.empty()) {
    for (const auto& entry : load_config_file(flags.config)) {
      settings.set(entry.key, entry.value,
                   "'" + flags.config + "' line " + std::to_string(entry.line));
    }
  }
  for (const auto& [key, value] : flags.values) settings.set_from_flag(key, value);
  return settings;
}

}  // namespace

int main(int argc, char** argv) {
  const char* log_env = std::getenv("GBPS_LOG");
  const std::string log_level = log_env != nullptr ? log_env : "info";
  gbps_set_log_level(log_level.c_str());
  g_quiet = log_level == "quiet";

  CLI::App app{"General Bayesian predictive synthesis decision engine"};
  app.require_subcommand(1);

  CommonFlags backtest_flags, posterior_flags, synth_flags, demo_flags;

  CLI::App* backtest = app.add_subcommand("backtest", "Run the monthly rebalancing backtest");
  backtest->add_option("--out", backtest_flags.out, "Report directory (default: .)");
  backtest->add_option("--config", backtest_flags.config, "key = value config file");
  add_value_flag(backtest, backtest_flags, "prices", "Monthly price CSV");
  for (const char* name : {"seed", "lambda", "discount", "particles", "temperature"}) {
    add_value_flag(backtest, backtest_flags, name, "");
  }

  CLI::App* posterior = app.add_subcommand("posterior", "Sample the static ensemble posterior");
  posterior->add_option("--out", posterior_flags.out, "Report directory (default: .)");
  posterior->add_option("--config", posterior_flags.config, "key = value config file");
  add_value_flag(posterior, posterior_flags, "ensemble", "Ensemble spec CSV");
  for (const char* name : {"seed", "lambda", "samples", "burn-in"}) {
    add_value_flag(posterior, posterior_flags, name, "");
  }

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic monthly market");
  synth->add_option("--out", synth_flags.out, "Output directory (default: .)");
  synth->add_option("--config", synth_flags.config, "key = value config file");
  add_value_flag(synth, synth_flags, "spec", "Regime spec file");
  add_value_flag(synth, synth_flags, "seed", "");

  CLI::App* demo = app.add_subcommand("demo-policy", "Run the causal policy-learning demo");
  demo->add_option("--out", demo_flags.out, "Report directory (default: .)");
  demo->add_option("--config", demo_flags.config, "key = value config file");
  add_value_flag(demo, demo_flags, "spec", "Demo spec file");
  for (const char* name : {"seed", "lambda", "temperature", "samples", "burn-in"}) {
    add_value_flag(demo, demo_flags, name, "");
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      fail(1, "cli", e.what());
    }

    // CLI11 accepts '-' in flag names; config keys use '_'.
    const auto canonicalize = [](CommonFlags& flags) {
      const auto it = flags.values.find("burn-in");
      if (it != flags.values.end()) {
        flags.values["burn_in"] = it->second;
        flags.values.erase("burn-in");
      }
    };
    canonicalize(posterior_flags);
    canonicalize(demo_flags);

    if (backtest->parsed()) {
      Settings settings = resolve_settings(backtest_flags, kBacktestKeys, kBacktestDefaults, {});
      return run_backtest_command(settings, backtest_flags.out);
    }
    if (posterior->parsed()) {
      Settings settings = resolve_settings(posterior_flags, kPosteriorKeys, kPosteriorDefaults, {});
      return run_posterior_command(settings, posterior_flags.out);
    }
    if (synth->parsed()) {
      Settings settings = resolve_settings(synth_flags, kSynthKeys, {}, {});
      return run_synth_command(settings, synth_flags.out);
    }
    if (demo->parsed()) {
      // Spec file sits below config and flags; find its path with the same
      // precedence before the full resolve.
      std::string spec_path;
      if (!demo_flags.config.empty()) {
        for (const auto& entry : load_config_file(demo_flags.config)) {
          if (entry.key == "spec") spec_path = entry.value;
        }
      }
      if (demo_flags.values.count("spec") != 0) spec_path = demo_flags.values.at("spec");
      std::vector<ConfigEntry> spec_entries;
      if (!spec_path.empty()) spec_entries = load_config_file(spec_path);
      Settings settings = resolve_settings(demo_flags, kDemoKeys, kDemoDefaults, spec_entries);
      if (!spec_path.empty()) settings.set("spec", spec_path, "resolved");
      return run_demo_command(settings, demo_flags.out);
    }
    fail(1, "cli", "no subcommand given");
  } catch (const CliError& e) {
    std::fprintf(stderr, "ERROR[%s]: %s\n", e.code.c_str(), e.message.c_str());
    return e.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ERROR[runtime]: %s\n", e.what());
    return 2;
  }
  return 0;
}
