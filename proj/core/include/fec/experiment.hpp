#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fec/sampler.hpp"

namespace fec {

// Bad configuration (unknown keys, unparsable values, invalid combinations).
// The CLI maps this to exit code 2; other failures exit 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value experiment description. Keys use target. / sampler. / run.
// prefixes plus command-specific bench. / scaling. / mixture. sections.
struct ExperimentConfig {
  // target.*
  std::string target_kind;  // gaussian | mixture | logistic
  int target_dim = 0;
  std::uint64_t target_seed = 1;      // mixture construction seed
  std::string target_dataset;         // logistic CSV path
  int target_label_column = -1;       // negative counts from the end
  bool target_standardize = true;
  bool target_add_intercept = true;
  double target_prior_variance = 1000.0;

  // sampler.*: either a preset name or explicit kernel strings
  std::string sampler_preset;
  std::string sampler_parallel = "direct";
  std::string sampler_orthogonal = "identity";
  std::string sampler_polarity = "naive";
  std::string sampler_law = "sphere";  // sphere | gaussian
  std::string sampler_refresh = "none";  // none | poisson(r) | full(T) | flag(T)
  double sampler_refresh_period = 0.0;   // consumed by presets with a clock
  double sampler_rw_half_width = 0.5;
  std::optional<double> sampler_ranp_angle;
  std::uint64_t sampler_basis_seed = 1;  // zigzag random basis

  // run.*
  double run_delta = 1.0;
  std::optional<double> run_time;     // sampled time span
  std::optional<long> run_samples;    // alternative: span = samples * delta
  std::optional<long> run_events;     // event-count cap
  double run_burnin = 0.0;            // trajectory time dropped up front
  int run_replicas = 1;
  std::uint64_t run_seed = 1;
  int run_workers = 1;
  std::string run_out = "out";

  // bench.*
  std::vector<std::string> bench_observables;  // default chosen per target
  int bench_max_lag = 0;                       // 0 = n/4

  // scaling.*
  std::vector<int> scaling_dims = {25, 100, 400};
  std::vector<std::string> scaling_schemes = {
      "forward-all-ref", "forward-ref", "forward-full-ref", "bps-full-ref"};
  std::vector<std::string> scaling_observables = {"coords", "potential"};
  std::optional<double> scaling_synthetic_amplitude;
  std::optional<double> scaling_synthetic_exponent;

  // mixture.*
  int mixture_bins = 61;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
// key=value, same grammar as one config line.
void apply_override(ExperimentConfig& config, const std::string& assignment);
// Canonical form; parse_config_text(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

std::unique_ptr<TargetModel> build_target(const ExperimentConfig& config);
SamplerConfig build_sampler(const ExperimentConfig& config, int dim);
Preset parse_preset(const std::string& name);
const char* preset_name(Preset preset);

// Subcommand drivers; they create run.out and write CSVs there. Throws
// ConfigError / std::invalid_argument for bad configuration and other
// exceptions for runtime failures.
void cmd_sample(const ExperimentConfig& config);
void cmd_bench(const ExperimentConfig& config);
void cmd_scaling(const ExperimentConfig& config);
void cmd_mixture(const ExperimentConfig& config);

}  // namespace fec
