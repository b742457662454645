#include <benchmark/benchmark.h>

#include "fec/events.hpp"
#include "fec/geometry.hpp"
#include "fec/kernels.hpp"
#include "fec/model.hpp"
#include "fec/rng.hpp"
#include "fec/sampler.hpp"

using namespace fec;

namespace {

void bm_linear_solver(benchmark::State& state) {
  Rng rng(1);
  for (auto _ : state) {
    const double a = rng.uniform(-3.0, 3.0);
    const double b = rng.uniform(-2.0, 2.0);
    benchmark::DoNotOptimize(linear_rate_event_time(a, b, rng.exponential()));
  }
}
BENCHMARK(bm_linear_solver);

void bm_logistic_factor_solver(benchmark::State& state) {
  Rng rng(2);
  for (auto _ : state) {
    const double tx = rng.normal();
    const double vx = rng.normal();
    benchmark::DoNotOptimize(
        logistic_event_time_dots(rng.bernoulli(0.5) ? 1 : 0, tx, vx,
                                 rng.exponential()));
  }
}
BENCHMARK(bm_logistic_factor_solver);

void bm_mixture_thinning(benchmark::State& state) {
  const GaussianMixture target(build_gaussian_mixture(8, 1));
  Rng rng(3);
  DirectionLaw law{DirectionMode::UnitSphere, 8};
  Vec x = Vec::Zero(8);
  for (auto _ : state) {
    const Vec y = sample_direction(law, rng);
    benchmark::DoNotOptimize(target.thinned_event_time(x, y, rng));
  }
}
BENCHMARK(bm_mixture_thinning);

void bm_assemble_direction(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  DirectionLaw law{DirectionMode::UnitSphere, d};
  KernelSpec spec;
  spec.law = law;
  spec.parallel.variant = ParallelVariant::Direct;
  spec.orthogonal.variant = OrthogonalVariant::Switch;
  spec.orthogonal.polarity = Polarity::Positive;
  Rng rng(4);
  Vec g(d);
  for (int i = 0; i < d; ++i) g[i] = rng.normal();
  const GradientFrame frame = make_frame(g);
  for (auto _ : state) {
    Vec y = sample_direction(law, rng);
    if (frame.parallel(y) < 0.0) y = -y;
    benchmark::DoNotOptimize(assemble_direction(spec, frame, y, rng));
  }
}
BENCHMARK(bm_assemble_direction)->Arg(25)->Arg(400);

void bm_gaussian_events(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const DiagonalGaussian target = build_anisotropic_gaussian(d);
  DirectionLaw law{DirectionMode::UnitSphere, d};
  const SamplerConfig config = make_preset(Preset::ForwardRefAll, law);
  Rng rng(5);
  long events = 0;
  for (auto _ : state) {
    RunOptions options;
    options.max_events = 2000;
    TrajectoryRecorder recorder;
    drive_config(target, config, options, rng, recorder);
    events += 2000;
  }
  state.SetItemsProcessed(events);
}
BENCHMARK(bm_gaussian_events)->Arg(25)->Arg(400)->Unit(benchmark::kMillisecond);

void bm_logistic_events(benchmark::State& state) {
  Rng gen(6);
  // Synthetic 200 x 10 table, enough to time the factorized loop.
  Mat cov(200, 10);
  std::vector<int> labels(200);
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 10; ++j) cov(i, j) = gen.normal();
    labels[static_cast<std::size_t>(i)] = gen.bernoulli(0.5) ? 1 : 0;
  }
  LogisticDataset data;
  data.covariates = cov;
  data.labels = labels;
  const LogisticPosterior target(std::move(data), 1000.0);
  DirectionLaw law{DirectionMode::UnitSphere, 10};
  const SamplerConfig config = make_preset(Preset::ForwardNoRef, law);
  Rng rng(7);
  long events = 0;
  for (auto _ : state) {
    RunOptions options;
    options.max_events = 500;
    TrajectoryRecorder recorder;
    drive_config(target, config, options, rng, recorder);
    events += 500;
  }
  state.SetItemsProcessed(events);
}
BENCHMARK(bm_logistic_events)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
