#include "fec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "fec/csv.hpp"
#include "fec/diagnostics.hpp"

namespace fec {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse number '" + value + "'");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse integer '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse unsigned integer '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": cannot parse boolean '" + value + "'");
}

void assign(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "target.kind") c.target_kind = value;
  else if (key == "target.dim") c.target_dim = static_cast<int>(parse_long(key, value));
  else if (key == "target.seed") c.target_seed = parse_u64(key, value);
  else if (key == "target.dataset") c.target_dataset = value;
  else if (key == "target.label_column") c.target_label_column = static_cast<int>(parse_long(key, value));
  else if (key == "target.standardize") c.target_standardize = parse_bool(key, value);
  else if (key == "target.add_intercept") c.target_add_intercept = parse_bool(key, value);
  else if (key == "target.prior_variance") c.target_prior_variance = parse_double(key, value);
  else if (key == "sampler.preset") c.sampler_preset = value;
  else if (key == "sampler.parallel") c.sampler_parallel = value;
  else if (key == "sampler.orthogonal") c.sampler_orthogonal = value;
  else if (key == "sampler.polarity") c.sampler_polarity = value;
  else if (key == "sampler.law") c.sampler_law = value;
  else if (key == "sampler.refresh") c.sampler_refresh = value;
  else if (key == "sampler.refresh_period") c.sampler_refresh_period = parse_double(key, value);
  else if (key == "sampler.rw_half_width") c.sampler_rw_half_width = parse_double(key, value);
  else if (key == "sampler.ranp_angle") c.sampler_ranp_angle = parse_double(key, value);
  else if (key == "sampler.basis_seed") c.sampler_basis_seed = parse_u64(key, value);
  else if (key == "run.delta") c.run_delta = parse_double(key, value);
  else if (key == "run.time") c.run_time = parse_double(key, value);
  else if (key == "run.samples") c.run_samples = parse_long(key, value);
  else if (key == "run.events") c.run_events = parse_long(key, value);
  else if (key == "run.burnin") c.run_burnin = parse_double(key, value);
  else if (key == "run.replicas") c.run_replicas = static_cast<int>(parse_long(key, value));
  else if (key == "run.seed") c.run_seed = parse_u64(key, value);
  else if (key == "run.workers") c.run_workers = static_cast<int>(parse_long(key, value));
  else if (key == "run.out") c.run_out = value;
  else if (key == "bench.observables") c.bench_observables = split(value, ',');
  else if (key == "bench.max_lag") c.bench_max_lag = static_cast<int>(parse_long(key, value));
  else if (key == "scaling.dims") {
    c.scaling_dims.clear();
    for (const auto& part : split(value, ',')) {
      c.scaling_dims.push_back(static_cast<int>(parse_long(key, part)));
    }
  } else if (key == "scaling.schemes") c.scaling_schemes = split(value, ',');
  else if (key == "scaling.observables") c.scaling_observables = split(value, ',');
  else if (key == "scaling.synthetic_amplitude") c.scaling_synthetic_amplitude = parse_double(key, value);
  else if (key == "scaling.synthetic_exponent") c.scaling_synthetic_exponent = parse_double(key, value);
  else if (key == "mixture.bins") c.mixture_bins = static_cast<int>(parse_long(key, value));
  else throw ConfigError("unknown configuration key '" + key + "'");
}

template <typename T>
std::string join(const std::vector<T>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>) out += parts[i];
    else out += std::to_string(parts[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::stringstream ss(text);
  std::string line;
  long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    assign(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like key=value: " + assignment);
  }
  assign(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "target.kind = " << c.target_kind << "\n";
  out << "target.dim = " << c.target_dim << "\n";
  out << "target.seed = " << c.target_seed << "\n";
  out << "target.dataset = " << c.target_dataset << "\n";
  out << "target.label_column = " << c.target_label_column << "\n";
  out << "target.standardize = " << (c.target_standardize ? "true" : "false") << "\n";
  out << "target.add_intercept = " << (c.target_add_intercept ? "true" : "false") << "\n";
  out << "target.prior_variance = " << fmt17(c.target_prior_variance) << "\n";
  out << "sampler.preset = " << c.sampler_preset << "\n";
  out << "sampler.parallel = " << c.sampler_parallel << "\n";
  out << "sampler.orthogonal = " << c.sampler_orthogonal << "\n";
  out << "sampler.polarity = " << c.sampler_polarity << "\n";
  out << "sampler.law = " << c.sampler_law << "\n";
  out << "sampler.refresh = " << c.sampler_refresh << "\n";
  out << "sampler.refresh_period = " << fmt17(c.sampler_refresh_period) << "\n";
  out << "sampler.rw_half_width = " << fmt17(c.sampler_rw_half_width) << "\n";
  if (c.sampler_ranp_angle) {
    out << "sampler.ranp_angle = " << fmt17(*c.sampler_ranp_angle) << "\n";
  }
  out << "sampler.basis_seed = " << c.sampler_basis_seed << "\n";
  out << "run.delta = " << fmt17(c.run_delta) << "\n";
  if (c.run_time) out << "run.time = " << fmt17(*c.run_time) << "\n";
  if (c.run_samples) out << "run.samples = " << *c.run_samples << "\n";
  if (c.run_events) out << "run.events = " << *c.run_events << "\n";
  out << "run.burnin = " << fmt17(c.run_burnin) << "\n";
  out << "run.replicas = " << c.run_replicas << "\n";
  out << "run.seed = " << c.run_seed << "\n";
  out << "run.workers = " << c.run_workers << "\n";
  out << "run.out = " << c.run_out << "\n";
  if (!c.bench_observables.empty()) {
    out << "bench.observables = " << join(c.bench_observables) << "\n";
  }
  out << "bench.max_lag = " << c.bench_max_lag << "\n";
  out << "scaling.dims = " << join(c.scaling_dims) << "\n";
  out << "scaling.schemes = " << join(c.scaling_schemes) << "\n";
  out << "scaling.observables = " << join(c.scaling_observables) << "\n";
  if (c.scaling_synthetic_amplitude) {
    out << "scaling.synthetic_amplitude = " << fmt17(*c.scaling_synthetic_amplitude) << "\n";
  }
  if (c.scaling_synthetic_exponent) {
    out << "scaling.synthetic_exponent = " << fmt17(*c.scaling_synthetic_exponent) << "\n";
  }
  out << "mixture.bins = " << c.mixture_bins << "\n";
  return out.str();
}

namespace {

// "name" or "name(arg1,arg2)"
struct KernelToken {
  std::string name;
  std::vector<std::string> args;
};

KernelToken parse_token(const std::string& raw) {
  const std::string s = trim(raw);
  KernelToken token;
  const auto open = s.find('(');
  if (open == std::string::npos) {
    token.name = s;
    return token;
  }
  if (s.back() != ')') {
    throw ConfigError("malformed kernel spec '" + s + "'");
  }
  token.name = trim(s.substr(0, open));
  const std::string inner = s.substr(open + 1, s.size() - open - 2);
  // split at top-level commas only, so mix(0.5, ranp(2)) stays intact
  int depth = 0;
  std::string cur;
  for (char ch : inner) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      token.args.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  token.args.push_back(trim(cur));
  return token;
}

ParallelVariant parallel_variant_of(const std::string& name) {
  if (name == "identity") return ParallelVariant::Identity;
  if (name == "direct") return ParallelVariant::Direct;
  if (name == "imh") return ParallelVariant::IndependentMH;
  if (name == "rwmh") return ParallelVariant::RandomWalkMH;
  throw ConfigError("unknown parallel kernel '" + name + "'");
}

ParallelKernel parse_parallel(const std::string& text, double rw_half_width) {
  ParallelKernel kernel;
  kernel.rw_half_width = rw_half_width;
  const KernelToken token = parse_token(text);
  if (token.name == "mix") {
    if (token.args.size() != 2) {
      throw ConfigError("parallel mix needs (weight, inner): " + text);
    }
    kernel.variant = ParallelVariant::Mixture;
    kernel.mix_identity_weight = parse_double("sampler.parallel", token.args[0]);
    kernel.mix_inner = parallel_variant_of(parse_token(token.args[1]).name);
    return kernel;
  }
  if (!token.args.empty()) {
    throw ConfigError("parallel kernel takes no arguments: " + text);
  }
  kernel.variant = parallel_variant_of(token.name);
  return kernel;
}

OrthogonalVariant orthogonal_variant_of(const KernelToken& token,
                                        OrthogonalKernel& kernel) {
  if (token.name == "identity") return OrthogonalVariant::Identity;
  if (token.name == "full") return OrthogonalVariant::Full;
  if (token.name == "switch") return OrthogonalVariant::Switch;
  if (token.name == "perp-switch") return OrthogonalVariant::PerpSwitch;
  if (token.name == "ranp") {
    if (token.args.size() != 1) {
      throw ConfigError("ranp needs its order: ranp(p)");
    }
    kernel.ranp_order = static_cast<int>(parse_long("sampler.orthogonal", token.args[0]));
    return OrthogonalVariant::RanP;
  }
  if (token.name == "ar") {
    if (token.args.size() != 1) {
      throw ConfigError("ar needs its coefficient: ar(rho)");
    }
    kernel.ar_coefficient = parse_double("sampler.orthogonal", token.args[0]);
    return OrthogonalVariant::AutoRegressive;
  }
  throw ConfigError("unknown orthogonal kernel '" + token.name + "'");
}

OrthogonalKernel parse_orthogonal(const std::string& text, Polarity polarity,
                                  std::optional<double> ranp_angle) {
  OrthogonalKernel kernel;
  kernel.polarity = polarity;
  kernel.ranp_angle = ranp_angle;
  const KernelToken token = parse_token(text);
  if (token.name == "mix") {
    if (token.args.size() != 2) {
      throw ConfigError("orthogonal mix needs (keep probability, inner): " + text);
    }
    kernel.variant = OrthogonalVariant::Mixture;
    kernel.mix_identity_weight = parse_double("sampler.orthogonal", token.args[0]);
    kernel.mix_inner = orthogonal_variant_of(parse_token(token.args[1]), kernel);
    return kernel;
  }
  kernel.variant = orthogonal_variant_of(token, kernel);
  return kernel;
}

RefreshStrategy parse_refresh(const std::string& text) {
  RefreshStrategy refresh;
  const KernelToken token = parse_token(text);
  if (token.name == "none") {
    if (!token.args.empty()) throw ConfigError("refresh 'none' takes no argument");
    return refresh;
  }
  if (token.args.size() != 1) {
    throw ConfigError("refresh '" + token.name + "' needs one argument");
  }
  const double arg = parse_double("sampler.refresh", token.args[0]);
  if (token.name == "poisson") {
    refresh.variant = RefreshVariant::Poisson;
    refresh.rate = arg;
  } else if (token.name == "full") {
    refresh.variant = RefreshVariant::FixedTimeFull;
    refresh.period = arg;
  } else if (token.name == "flag") {
    refresh.variant = RefreshVariant::FixedTimeFlag;
    refresh.period = arg;
  } else {
    throw ConfigError("unknown refresh strategy '" + token.name + "'");
  }
  return refresh;
}

}  // namespace

Preset parse_preset(const std::string& name) {
  if (name == "forward-no-ref") return Preset::ForwardNoRef;
  if (name == "forward-all-ref") return Preset::ForwardRefAll;
  if (name == "forward-ref") return Preset::ForwardRef;
  if (name == "forward-full-ref") return Preset::ForwardFullRef;
  if (name == "bps-full-ref") return Preset::BpsFullRef;
  if (name == "bps-no-ref") return Preset::BpsNoRef;
  if (name == "zigzag") return Preset::ZigZag;
  if (name == "zigzag-random") return Preset::ZigZagRandom;
  throw ConfigError("unknown sampler preset '" + name + "'");
}

const char* preset_name(Preset preset) {
  switch (preset) {
    case Preset::ForwardNoRef: return "forward-no-ref";
    case Preset::ForwardRefAll: return "forward-all-ref";
    case Preset::ForwardRef: return "forward-ref";
    case Preset::ForwardFullRef: return "forward-full-ref";
    case Preset::BpsFullRef: return "bps-full-ref";
    case Preset::BpsNoRef: return "bps-no-ref";
    case Preset::ZigZag: return "zigzag";
    case Preset::ZigZagRandom: return "zigzag-random";
  }
  return "?";
}

std::unique_ptr<TargetModel> build_target(const ExperimentConfig& config) {
  if (config.target_kind == "gaussian") {
    if (config.target_dim < 2) {
      throw ConfigError("gaussian target needs target.dim >= 2");
    }
    return std::make_unique<DiagonalGaussian>(
        build_anisotropic_gaussian(config.target_dim));
  }
  if (config.target_kind == "mixture") {
    if (config.target_dim < 1) {
      throw ConfigError("mixture target needs target.dim >= 1");
    }
    return std::make_unique<GaussianMixture>(
        build_gaussian_mixture(config.target_dim, config.target_seed));
  }
  if (config.target_kind == "logistic") {
    if (config.target_dataset.empty()) {
      throw ConfigError("logistic target needs target.dataset");
    }
    LogisticDataset data =
        load_uci_csv(config.target_dataset, config.target_label_column,
                     config.target_standardize, config.target_add_intercept);
    return std::make_unique<LogisticPosterior>(std::move(data),
                                               config.target_prior_variance);
  }
  throw ConfigError("unknown target.kind '" + config.target_kind + "'");
}

SamplerConfig build_sampler(const ExperimentConfig& config, int dim) {
  DirectionLaw law;
  law.dim = dim;
  if (config.sampler_law == "sphere") {
    law.mode = DirectionMode::UnitSphere;
  } else if (config.sampler_law == "gaussian") {
    law.mode = DirectionMode::Gaussian;
  } else {
    throw ConfigError("unknown sampler.law '" + config.sampler_law + "'");
  }
  if (!config.sampler_preset.empty()) {
    SamplerConfig out = make_preset(parse_preset(config.sampler_preset), law,
                                    config.sampler_refresh_period);
    out.zz.basis_seed = config.sampler_basis_seed;
    if (!out.zigzag) validate_kernels(out.kernels);
    return out;
  }
  SamplerConfig out;
  out.kernels.law = law;
  out.kernels.parallel =
      parse_parallel(config.sampler_parallel, config.sampler_rw_half_width);
  Polarity polarity;
  if (config.sampler_polarity == "naive") polarity = Polarity::Naive;
  else if (config.sampler_polarity == "positive") polarity = Polarity::Positive;
  else throw ConfigError("unknown sampler.polarity '" + config.sampler_polarity + "'");
  out.kernels.orthogonal = parse_orthogonal(config.sampler_orthogonal, polarity,
                                            config.sampler_ranp_angle);
  out.refresh = parse_refresh(config.sampler_refresh);
  validate_kernels(out.kernels);
  return out;
}

namespace {

Observable parse_observable(const std::string& name) {
  if (name == "potential" || name == "u") return Observable::Potential;
  if (name == "sqnorm") return Observable::SquaredNorm;
  if (name == "coords" || name == "x") return Observable::Coordinate;
  if (name == "nll") return Observable::NegLogLik;
  throw ConfigError("unknown observable '" + name + "'");
}

std::vector<std::string> default_observables(const ExperimentConfig& config) {
  if (config.target_kind == "logistic") return {"potential", "nll", "coords"};
  return {"potential", "sqnorm", "coords"};
}

struct SpanSetup {
  RunOptions options;
  double burnin = 0.0;
};

SpanSetup build_span(const ExperimentConfig& config) {
  SpanSetup setup;
  setup.burnin = config.run_burnin;
  if (!(config.run_delta > 0.0)) {
    throw ConfigError("run.delta must be positive");
  }
  if (config.run_samples) {
    if (*config.run_samples < 1) throw ConfigError("run.samples must be >= 1");
    setup.options.time_horizon =
        config.run_burnin + static_cast<double>(*config.run_samples) * config.run_delta;
  } else if (config.run_time) {
    if (!(*config.run_time > 0.0)) throw ConfigError("run.time must be positive");
    setup.options.time_horizon = config.run_burnin + *config.run_time;
  }
  if (config.run_events) {
    if (*config.run_events < 1) throw ConfigError("run.events must be >= 1");
    setup.options.max_events = *config.run_events;
  }
  if (std::isinf(setup.options.time_horizon) && !config.run_events) {
    throw ConfigError("need run.samples, run.time, or run.events");
  }
  return setup;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& config) {
  std::filesystem::path dir(config.run_out);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_config_comments(CsvWriter& csv, const ExperimentConfig& config,
                           const std::string& command) {
  csv.comment("command: " + command);
  std::stringstream ss(serialize_config(config));
  std::string line;
  while (std::getline(ss, line)) csv.comment(line);
}

struct ReplicaDiag {
  long samples = 0;
  long events = 0;
  double n_delta = 0.0;
  double tau = 0.0;
  double tau_events = 0.0;
  double ess = 0.0;
  double ess_per_event = 0.0;
  bool truncated = false;
  long cutoff = 0;
  std::vector<double> curve;
};

ReplicaDiag diagnose(const TargetModel& target, const SampleSeries& series,
                     Observable obs, int max_lag_config) {
  ReplicaDiag diag;
  diag.samples = series.sample_count;
  diag.events = series.event_count;
  diag.n_delta = series.events_per_sample;
  const long n = series.sample_count;
  if (n < 8) {
    throw std::runtime_error(
        "too few discretized samples for diagnostics; lengthen the run");
  }
  int max_lag = max_lag_config > 0 ? max_lag_config
                                   : static_cast<int>(std::max<long>(100, n / 4));
  max_lag = static_cast<int>(std::min<long>(max_lag, n - 1));
  AcfCurve curve;
  const bool have_true = target.moments(obs, 0).has_value();
  if (obs == Observable::Coordinate) {
    const int d = static_cast<int>(series.positions.cols());
    if (have_true) {
      std::vector<ObservableMoments> per_col;
      per_col.reserve(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) per_col.push_back(*target.moments(obs, i));
      curve = acf_columns_mean(series.positions, max_lag, &per_col);
    } else {
      curve = acf_columns_mean(series.positions, max_lag, nullptr);
    }
  } else {
    const std::vector<double> h = observable_series(target, series.positions, obs);
    curve = acf(h, max_lag, target.moments(obs, 0));
  }
  const IntegratedTime it = integrated_time(curve, n);
  diag.tau = it.tau;
  diag.truncated = it.truncated;
  diag.cutoff = it.n_int;
  diag.tau_events = it.tau * series.events_per_sample;
  // A non-positive tau estimate means the window never resolved the
  // correlation time; an ESS number would be pure noise then.
  diag.ess = it.tau > 0.0 ? ess_from_tau(n, it.tau)
                          : std::numeric_limits<double>::quiet_NaN();
  diag.ess_per_event = series.event_count > 0
                           ? diag.ess / static_cast<double>(series.event_count)
                           : std::numeric_limits<double>::quiet_NaN();
  diag.curve = std::move(curve.values);
  return diag;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (static_cast<double>(v.size()) - 1.0) /
                   static_cast<double>(v.size()));
}

}  // namespace

void cmd_sample(const ExperimentConfig& config) {
  const auto target = build_target(config);
  const SamplerConfig sampler = build_sampler(config, target->dim());
  const SpanSetup span = build_span(config);
  const auto dir = prepare_out_dir(config);
  Rng rng(config.run_seed);
  const Trajectory trajectory = run_config(*target, sampler, span.options, rng);
  const int d = target->dim();

  {
    CsvWriter csv((dir / "segments.csv").string());
    write_config_comments(csv, config, "sample");
    std::vector<std::string> names{"index", "start_time", "duration"};
    for (int i = 0; i < d; ++i) names.push_back("x" + std::to_string(i));
    for (int i = 0; i < d; ++i) names.push_back("y" + std::to_string(i));
    csv.header(names);
    std::vector<double> row;
    for (std::size_t s = 0; s < trajectory.segments.size(); ++s) {
      const auto& seg = trajectory.segments[s];
      row.clear();
      row.push_back(static_cast<double>(s));
      row.push_back(seg.start_time);
      row.push_back(seg.duration);
      for (int i = 0; i < d; ++i) row.push_back(seg.position[i]);
      for (int i = 0; i < d; ++i) row.push_back(seg.direction[i]);
      csv.row(row);
    }
  }
  {
    CsvWriter csv((dir / "events.csv").string());
    write_config_comments(csv, config, "sample");
    csv.comment("total_time: " + fmt17(trajectory.total_time));
    csv.comment("gradient_events: " + std::to_string(trajectory.gradient_events));
    csv.comment("refresh_events: " + std::to_string(trajectory.refresh_events));
    const std::vector<std::string> names{"index", "time", "kind", "factor",
                                         "budget", "primary_kernel"};
    csv.header(names);
    for (std::size_t e = 0; e < trajectory.events.size(); ++e) {
      const auto& ev = trajectory.events[e];
      const char* kind = ev.kind == EventKind::GradientEvent ? "gradient-event"
                         : ev.kind == EventKind::Refresh     ? "refresh"
                                                             : "flag-reset";
      const std::vector<std::string> cells{std::to_string(e), fmt17(ev.time), kind};
      const std::vector<double> nums{static_cast<double>(ev.factor), ev.budget,
                                     ev.primary_kernel ? 1.0 : 0.0};
      csv.row(cells, nums);
    }
  }
  {
    SampleSeries series;
    {
      StreamingDiscretizer disc(d, config.run_delta, span.burnin);
      for (const auto& seg : trajectory.segments) {
        disc.on_segment(seg.start_time, seg.position, seg.direction, seg.duration);
      }
      for (const auto& ev : trajectory.events) disc.on_event(ev);
      disc.on_finish(trajectory.total_time);
      series = disc.take();
    }
    CsvWriter csv((dir / "samples.csv").string());
    write_config_comments(csv, config, "sample");
    csv.comment("events_per_sample: " + fmt17(series.events_per_sample));
    std::vector<std::string> names{"index", "time"};
    for (int i = 0; i < d; ++i) names.push_back("x" + std::to_string(i));
    csv.header(names);
    std::vector<double> row;
    for (long s = 0; s < series.sample_count; ++s) {
      row.clear();
      row.push_back(static_cast<double>(s));
      row.push_back(span.burnin + static_cast<double>(s + 1) * config.run_delta);
      for (int i = 0; i < d; ++i) row.push_back(series.positions(s, i));
      csv.row(row);
    }
  }
}

namespace {

struct BenchResults {
  std::vector<std::string> observable_names;
  std::vector<Observable> observables;
  // indexed [observable][replica]
  std::vector<std::vector<ReplicaDiag>> diags;
};

BenchResults run_bench_replicas(const ExperimentConfig& config,
                                const TargetModel& target,
                                const SamplerConfig& sampler) {
  const SpanSetup span = build_span(config);
  BenchResults results;
  results.observable_names = config.bench_observables.empty()
                                 ? default_observables(config)
                                 : config.bench_observables;
  for (const auto& name : results.observable_names) {
    results.observables.push_back(parse_observable(name));
  }
  const int R = std::max(1, config.run_replicas);
  results.diags.assign(results.observables.size(), std::vector<ReplicaDiag>(R));
  parallel_for(R, config.run_workers, [&](int r) {
    Rng rng(config.run_seed + static_cast<std::uint64_t>(r));
    StreamingDiscretizer disc(target.dim(), config.run_delta, span.burnin);
    drive_config(target, sampler, span.options, rng, disc);
    const SampleSeries series = disc.take();
    for (std::size_t o = 0; o < results.observables.size(); ++o) {
      results.diags[o][static_cast<std::size_t>(r)] =
          diagnose(target, series, results.observables[o], config.bench_max_lag);
    }
  });
  return results;
}

void write_bench_outputs(const ExperimentConfig& config,
                         const BenchResults& results,
                         const std::filesystem::path& dir,
                         const std::string& command) {
  {
    CsvWriter csv((dir / "replicas.csv").string());
    write_config_comments(csv, config, command);
    const std::vector<std::string> names{
        "observable", "replica",   "samples",       "events",
        "n_delta",    "tau",       "tau_events",    "ess",
        "ess_per_event", "truncated", "acf_cutoff_lag"};
    csv.header(names);
    for (std::size_t o = 0; o < results.observables.size(); ++o) {
      for (std::size_t r = 0; r < results.diags[o].size(); ++r) {
        const auto& d = results.diags[o][r];
        const std::vector<std::string> cells{results.observable_names[o],
                                             std::to_string(r)};
        const std::vector<double> nums{
            static_cast<double>(d.samples), static_cast<double>(d.events),
            d.n_delta, d.tau, d.tau_events, d.ess, d.ess_per_event,
            d.truncated ? 1.0 : 0.0, static_cast<double>(d.cutoff)};
        csv.row(cells, nums);
      }
    }
  }
  {
    CsvWriter csv((dir / "summary.csv").string());
    write_config_comments(csv, config, command);
    const std::vector<std::string> names{
        "observable",     "replicas",       "samples_mean",
        "n_delta_mean",   "tau_mean",       "tau_stderr",
        "tau_events_mean", "tau_events_stderr", "ess_mean",
        "ess_per_event_mean", "ess_per_event_stderr", "truncated_replicas"};
    csv.header(names);
    for (std::size_t o = 0; o < results.observables.size(); ++o) {
      std::vector<double> taus, tau_events, esses, esspe, ns, ndeltas;
      double truncated = 0.0;
      for (const auto& d : results.diags[o]) {
        taus.push_back(d.tau);
        tau_events.push_back(d.tau_events);
        esses.push_back(d.ess);
        esspe.push_back(d.ess_per_event);
        ns.push_back(static_cast<double>(d.samples));
        ndeltas.push_back(d.n_delta);
        truncated += d.truncated ? 1.0 : 0.0;
      }
      const std::vector<std::string> cells{results.observable_names[o]};
      const std::vector<double> nums{
          static_cast<double>(results.diags[o].size()), mean_of(ns),
          mean_of(ndeltas), mean_of(taus), stderr_of(taus), mean_of(tau_events),
          stderr_of(tau_events), mean_of(esses), mean_of(esspe),
          stderr_of(esspe), truncated};
      csv.row(cells, nums);
    }
  }
  for (std::size_t o = 0; o < results.observables.size(); ++o) {
    CsvWriter csv((dir / ("acf_" + results.observable_names[o] + ".csv")).string());
    write_config_comments(csv, config, command);
    std::size_t min_len = SIZE_MAX;
    for (const auto& d : results.diags[o]) {
      min_len = std::min(min_len, d.curve.size());
    }
    double n_delta_mean = 0.0;
    for (const auto& d : results.diags[o]) n_delta_mean += d.n_delta;
    n_delta_mean /= static_cast<double>(results.diags[o].size());
    const std::vector<std::string> names{"lag", "lag_time", "lag_events", "c"};
    csv.header(names);
    for (std::size_t k = 0; k < min_len; ++k) {
      double c = 0.0;
      for (const auto& d : results.diags[o]) c += d.curve[k];
      c /= static_cast<double>(results.diags[o].size());
      const std::vector<double> row{
          static_cast<double>(k), static_cast<double>(k) * config.run_delta,
          static_cast<double>(k) * n_delta_mean, c};
      csv.row(row);
    }
  }
}

}  // namespace

void cmd_bench(const ExperimentConfig& config) {
  const auto target = build_target(config);
  const SamplerConfig sampler = build_sampler(config, target->dim());
  const auto dir = prepare_out_dir(config);
  const BenchResults results = run_bench_replicas(config, *target, sampler);
  write_bench_outputs(config, results, dir, "bench");
}

void cmd_scaling(const ExperimentConfig& config) {
  const auto dir = prepare_out_dir(config);

  if (config.scaling_synthetic_amplitude || config.scaling_synthetic_exponent) {
    if (!config.scaling_synthetic_amplitude || !config.scaling_synthetic_exponent) {
      throw ConfigError("synthetic scaling needs both amplitude and exponent");
    }
    // Deterministic noisy power-law series to exercise the fit end to end.
    const double A = *config.scaling_synthetic_amplitude;
    const double z = *config.scaling_synthetic_exponent;
    if (!(A > 0.0)) throw ConfigError("synthetic amplitude must be positive");
    Rng rng(config.run_seed);
    std::vector<ScalingPoint> points;
    for (int d : config.scaling_dims) {
      const double tau = A * std::pow(d, z) * std::exp(0.02 * rng.normal());
      points.push_back({static_cast<double>(d), tau, 0.02 * tau});
    }
    const ScalingFit fit = fit_scaling(points);
    CsvWriter csv((dir / "scaling_synthetic.csv").string());
    write_config_comments(csv, config, "scaling");
    csv.comment("fit: amplitude=" + fmt17(fit.amplitude) +
                " exponent=" + fmt17(fit.exponent) +
                " amplitude_err=" + fmt17(fit.amplitude_err) +
                " exponent_err=" + fmt17(fit.exponent_err));
    const std::vector<std::string> names{"dim", "tau", "tau_err"};
    csv.header(names);
    for (const auto& p : points) {
      const std::vector<double> row{p.dim, p.tau, p.err};
      csv.row(row);
    }
    return;
  }

  if (config.target_kind != "gaussian") {
    throw ConfigError("scaling runs use the gaussian target");
  }
  struct TableKey {
    std::string scheme, obs;
  };
  std::vector<TableKey> tables;
  for (const auto& scheme : config.scaling_schemes) {
    for (const auto& obs : config.scaling_observables) {
      tables.push_back({scheme, obs});
    }
  }
  std::vector<std::vector<ScalingPoint>> points(tables.size());
  std::vector<std::vector<double>> n_deltas(tables.size());

  for (int d : config.scaling_dims) {
    ExperimentConfig sub = config;
    sub.target_dim = d;
    sub.bench_observables = config.scaling_observables;
    const auto target = build_target(sub);
    for (const auto& scheme : config.scaling_schemes) {
      sub.sampler_preset = scheme;
      const SamplerConfig sampler = build_sampler(sub, d);
      const BenchResults results = run_bench_replicas(sub, *target, sampler);
      for (std::size_t o = 0; o < results.observables.size(); ++o) {
        std::vector<double> tau_events, nd;
        for (const auto& diag : results.diags[o]) {
          tau_events.push_back(diag.tau_events);
          nd.push_back(diag.n_delta);
        }
        for (std::size_t t = 0; t < tables.size(); ++t) {
          if (tables[t].scheme == scheme &&
              tables[t].obs == results.observable_names[o]) {
            points[t].push_back({static_cast<double>(d), mean_of(tau_events),
                                 stderr_of(tau_events)});
            n_deltas[t].push_back(mean_of(nd));
          }
        }
      }
    }
  }

  CsvWriter fits((dir / "fits.csv").string());
  write_config_comments(fits, config, "scaling");
  const std::vector<std::string> fit_names{"scheme",       "observable",
                                           "amplitude",    "exponent",
                                           "amplitude_err", "exponent_err"};
  fits.header(fit_names);
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const ScalingFit fit = fit_scaling(points[t]);
    {
      CsvWriter csv(
          (dir / ("scaling_" + tables[t].scheme + "_" + tables[t].obs + ".csv"))
              .string());
      write_config_comments(csv, config, "scaling");
      csv.comment("fit: amplitude=" + fmt17(fit.amplitude) +
                  " exponent=" + fmt17(fit.exponent) +
                  " amplitude_err=" + fmt17(fit.amplitude_err) +
                  " exponent_err=" + fmt17(fit.exponent_err));
      const std::vector<std::string> names{"dim", "tau", "tau_err", "n_delta"};
      csv.header(names);
      for (std::size_t i = 0; i < points[t].size(); ++i) {
        const std::vector<double> row{points[t][i].dim, points[t][i].tau,
                                      points[t][i].err, n_deltas[t][i]};
        csv.row(row);
      }
    }
    const std::vector<std::string> cells{tables[t].scheme, tables[t].obs};
    const std::vector<double> nums{fit.amplitude, fit.exponent,
                                   fit.amplitude_err, fit.exponent_err};
    fits.row(cells, nums);
  }
}

void cmd_mixture(const ExperimentConfig& config) {
  if (config.target_kind != "mixture") {
    throw ConfigError("mixture runs need target.kind = mixture");
  }
  const auto target_base = build_target(config);
  const auto* mixture = dynamic_cast<const GaussianMixture*>(target_base.get());
  const SamplerConfig sampler = build_sampler(config, mixture->dim());
  const SpanSetup span = build_span(config);
  const auto dir = prepare_out_dir(config);
  const int R = std::max(1, config.run_replicas);
  const int d = mixture->dim();

  std::vector<std::vector<double>> occupancy(R);
  std::vector<std::vector<double>> first_coord(R);
  std::vector<long> counts(R, 0);
  parallel_for(R, config.run_workers, [&](int r) {
    Rng rng(config.run_seed + static_cast<std::uint64_t>(r));
    StreamingDiscretizer disc(d, config.run_delta, span.burnin);
    drive_config(*target_base, sampler, span.options, rng, disc);
    const SampleSeries series = disc.take();
    if (series.empty) {
      throw std::runtime_error("mixture run produced no samples; lengthen it");
    }
    std::vector<Vec> means(mixture->spec().means.begin(),
                           mixture->spec().means.end());
    occupancy[r] = mixture_occupancy(series.positions, means);
    counts[r] = series.sample_count;
    first_coord[r].resize(static_cast<std::size_t>(series.sample_count));
    for (long i = 0; i < series.sample_count; ++i) {
      first_coord[r][static_cast<std::size_t>(i)] = series.positions(i, 0);
    }
  });

  long total = 0;
  for (long c : counts) total += c;
  Rng oracle_rng(config.run_seed + 1000003ULL);
  Mat oracle_samples(total, d);
  for (long i = 0; i < total; ++i) {
    oracle_samples.row(i) = mixture->sample_exact(oracle_rng).transpose();
  }
  std::vector<Vec> means(mixture->spec().means.begin(),
                         mixture->spec().means.end());
  const std::vector<double> oracle_occ = mixture_occupancy(oracle_samples, means);

  {
    CsvWriter csv((dir / "occupancy.csv").string());
    write_config_comments(csv, config, "mixture");
    const std::vector<std::string> names{"source", "replica", "samples",
                                         "p1", "p2", "p3", "p4", "p5"};
    csv.header(names);
    for (int r = 0; r < R; ++r) {
      const std::vector<std::string> cells{"sampler", std::to_string(r)};
      std::vector<double> nums{static_cast<double>(counts[r])};
      for (double p : occupancy[r]) nums.push_back(p);
      csv.row(cells, nums);
    }
    std::vector<double> mean_occ(5, 0.0);
    for (int r = 0; r < R; ++r) {
      for (int j = 0; j < 5; ++j) mean_occ[j] += occupancy[r][j];
    }
    for (auto& p : mean_occ) p /= R;
    {
      const std::vector<std::string> cells{"sampler-mean", "-1"};
      std::vector<double> nums{static_cast<double>(total)};
      for (double p : mean_occ) nums.push_back(p);
      csv.row(cells, nums);
    }
    {
      const std::vector<std::string> cells{"oracle", "-1"};
      std::vector<double> nums{static_cast<double>(total)};
      for (double p : oracle_occ) nums.push_back(p);
      csv.row(cells, nums);
    }
  }
  {
    double lo = kInf, hi = -kInf;
    for (int r = 0; r < R; ++r) {
      for (double v : first_coord[r]) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    for (long i = 0; i < total; ++i) {
      lo = std::min(lo, oracle_samples(i, 0));
      hi = std::max(hi, oracle_samples(i, 0));
    }
    const int bins = std::max(1, config.mixture_bins);
    const double width = (hi - lo) / bins;
    std::vector<double> sampler_counts(bins, 0.0), oracle_counts(bins, 0.0);
    const auto bin_of = [&](double v) {
      int b = static_cast<int>((v - lo) / width);
      return std::min(std::max(b, 0), bins - 1);
    };
    long sampler_total = 0;
    for (int r = 0; r < R; ++r) {
      for (double v : first_coord[r]) {
        sampler_counts[bin_of(v)] += 1.0;
        ++sampler_total;
      }
    }
    for (long i = 0; i < total; ++i) oracle_counts[bin_of(oracle_samples(i, 0))] += 1.0;
    CsvWriter csv((dir / "histogram.csv").string());
    write_config_comments(csv, config, "mixture");
    const std::vector<std::string> names{"bin_lo",        "bin_hi",
                                         "sampler_count", "sampler_density",
                                         "oracle_count",  "oracle_density"};
    csv.header(names);
    for (int b = 0; b < bins; ++b) {
      const std::vector<double> row{
          lo + b * width,
          lo + (b + 1) * width,
          sampler_counts[b],
          sampler_counts[b] / (sampler_total * width),
          oracle_counts[b],
          oracle_counts[b] / (total * width)};
      csv.row(row);
    }
  }
}

}  // namespace fec
