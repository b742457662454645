#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fec/sampler.hpp"
#include "support/dataset.hpp"
#include "support/testutil.hpp"

using namespace fec;

namespace {

KernelSpec bps_kernels(int d) {
  KernelSpec spec;
  spec.law = {DirectionMode::UnitSphere, d};
  spec.parallel.variant = ParallelVariant::Identity;
  spec.orthogonal.variant = OrthogonalVariant::Identity;
  return spec;
}

KernelSpec forward_kernels(int d) {
  KernelSpec spec;
  spec.law = {DirectionMode::UnitSphere, d};
  spec.parallel.variant = ParallelVariant::Direct;
  spec.orthogonal.variant = OrthogonalVariant::Switch;
  spec.orthogonal.polarity = Polarity::Positive;
  return spec;
}

// Position right before the event that ends the segment starting at index s.
Vec segment_end(const TrajectorySegment& seg) {
  return seg.position + seg.duration * seg.direction;
}

// Index of the segment whose end coincides with the event time.
int segment_ending_at(const Trajectory& traj, double time) {
  for (std::size_t s = 0; s < traj.segments.size(); ++s) {
    const auto& seg = traj.segments[s];
    if (std::abs(seg.start_time + seg.duration - time) < 1e-9) {
      return static_cast<int>(s);
    }
  }
  return -1;
}

}  // namespace

TEST_CASE("identity kernels reproduce the exact specular reflection") {
  const DiagonalGaussian target = standard_gaussian(4);
  RunOptions options;
  options.max_events = 3000;
  options.initial_position = Vec::Constant(4, 0.7);
  Rng rng(61);
  const Trajectory traj =
      run_forward_ec(target, bps_kernels(4), RefreshStrategy{}, options, rng);
  REQUIRE(traj.gradient_events == 3000);
  int checked = 0;
  for (const auto& ev : traj.events) {
    if (ev.kind != EventKind::GradientEvent) continue;
    const int s = segment_ending_at(traj, ev.time);
    REQUIRE(s >= 0);
    // An event-capped run ends at its last event, which has no out-segment.
    if (s + 1 >= static_cast<int>(traj.segments.size())) continue;
    const Vec x = segment_end(traj.segments[s]);
    const Vec y_in = traj.segments[s].direction;
    const Vec y_out = traj.segments[s + 1].direction;
    const Vec grad = target.gradient(x);
    const Vec n = grad / grad.norm();
    const Vec reflected = y_in - 2.0 * n.dot(y_in) * n;
    CHECK((y_out - reflected).norm() < 1e-10);
    ++checked;
  }
  CHECK(checked == 2999);
}

TEST_CASE("runs are reproducible from the seed") {
  const DiagonalGaussian target = standard_gaussian(3);
  RunOptions options;
  options.max_events = 500;
  Rng a(62), b(62);
  const Trajectory ta =
      run_forward_ec(target, forward_kernels(3), RefreshStrategy{}, options, a);
  const Trajectory tb =
      run_forward_ec(target, forward_kernels(3), RefreshStrategy{}, options, b);
  REQUIRE(ta.segments.size() == tb.segments.size());
  CHECK(ta.total_time == tb.total_time);
  const Vec xa = segment_end(ta.segments.back());
  const Vec xb = segment_end(tb.segments.back());
  CHECK((xa - xb).norm() == 0.0);
}

TEST_CASE("horizon and event caps bind exactly") {
  const DiagonalGaussian target = standard_gaussian(3);
  Rng rng(63);
  RunOptions horizon;
  horizon.time_horizon = 25.0;
  const Trajectory th = run_forward_ec(target, forward_kernels(3),
                                       RefreshStrategy{}, horizon, rng);
  CHECK(th.total_time == doctest::Approx(25.0).epsilon(1e-12));
  double span = 0.0;
  for (const auto& seg : th.segments) span += seg.duration;
  CHECK(span == doctest::Approx(25.0).epsilon(1e-12));

  RunOptions cap;
  cap.max_events = 123;
  const Trajectory tc =
      run_forward_ec(target, forward_kernels(3), RefreshStrategy{}, cap, rng);
  CHECK(tc.event_count() == 123);
}

TEST_CASE("poisson refresh arrivals are exponential despite interleaving") {
  const DiagonalGaussian target = standard_gaussian(3);
  RefreshStrategy refresh;
  refresh.variant = RefreshVariant::Poisson;
  refresh.rate = 0.8;
  RunOptions options;
  options.max_events = 40000;
  Rng rng(64);
  const Trajectory traj = run_forward_ec(target, forward_kernels(3), refresh,
                                         options, rng);
  std::vector<double> gaps;
  double last = 0.0;
  for (const auto& ev : traj.events) {
    if (ev.kind != EventKind::Refresh) continue;
    gaps.push_back(ev.time - last);
    last = ev.time;
  }
  REQUIRE(gaps.size() > 2000);
  const double p = testutil::ks_one_sample(
      gaps, [](double t) { return 1.0 - std::exp(-0.8 * t); });
  CHECK(p > 1e-4);
  CHECK(traj.refresh_events == static_cast<long>(gaps.size()));
}

TEST_CASE("fixed-time full refresh fires on the exact grid") {
  const DiagonalGaussian target = standard_gaussian(3);
  RefreshStrategy refresh;
  refresh.variant = RefreshVariant::FixedTimeFull;
  refresh.period = 2.5;
  RunOptions options;
  options.time_horizon = 100.0;
  Rng rng(65);
  const Trajectory traj = run_forward_ec(target, forward_kernels(3), refresh,
                                         options, rng);
  long k = 0;
  for (const auto& ev : traj.events) {
    if (ev.kind != EventKind::Refresh) continue;
    ++k;
    CHECK(std::abs(ev.time - 2.5 * k) < 1e-7);
  }
  // 2.5, 5.0, ..., 97.5, and possibly a tick that ties with the horizon
  CHECK(k >= 39);
  CHECK(k <= 40);
}

TEST_CASE("flag refresh re-arms the primary kernel once per period") {
  const DiagonalGaussian target = standard_gaussian(3);
  RefreshStrategy refresh;
  refresh.variant = RefreshVariant::FixedTimeFlag;
  // Long periods so that most ticks see at least one event (primary) and
  // most periods see several (secondaries). Horizon avoids a tick/horizon tie.
  refresh.period = 5.0;
  RunOptions options;
  options.time_horizon = 999.0;
  Rng rng(66);
  const Trajectory traj = run_forward_ec(target, forward_kernels(3), refresh,
                                         options, rng);
  CHECK(traj.refresh_events == 0);  // resets are not refreshes

  bool armed = true;  // the run starts armed
  long resets = 0, primaries = 0, secondaries = 0;
  for (const auto& ev : traj.events) {
    if (ev.kind == EventKind::FlagReset) {
      armed = true;
      ++resets;
      continue;
    }
    REQUIRE(ev.kind == EventKind::GradientEvent);
    CHECK(ev.primary_kernel == armed);
    if (armed) ++primaries;
    else ++secondaries;
    armed = false;
  }
  CHECK(resets == 199);
  CHECK(primaries > 100);
  CHECK(secondaries > 100);
  // the counter only counts real events
  CHECK(traj.event_count() == traj.gradient_events);
}

TEST_CASE("event budgets match the integrated rate along the segment") {
  const DiagonalGaussian target(build_anisotropic_gaussian(3));
  RunOptions options;
  options.max_events = 800;
  options.initial_position = Vec::Constant(3, 1.0);
  Rng rng(67);
  const Trajectory traj = run_forward_ec(target, forward_kernels(3),
                                         RefreshStrategy{}, options, rng);
  int checked = 0;
  for (const auto& ev : traj.events) {
    if (ev.kind != EventKind::GradientEvent) continue;
    const int s = segment_ending_at(traj, ev.time);
    REQUIRE(s >= 0);
    const auto& seg = traj.segments[s];
    // integral of max(0, a + b t) over the segment, a/b from the line rate
    const QuadraticLineRate line = target.line_rate(seg.position, seg.direction);
    const double a = 2.0 * line.u0 * line.t0;
    const double b = 2.0 * line.u0;
    const double T = seg.duration;
    double mass = 0.0;
    const double lo = std::clamp(-a / b, 0.0, T);
    mass = a * (T - lo) + 0.5 * b * (T * T - lo * lo);
    CHECK(mass == doctest::Approx(ev.budget).epsilon(1e-8));
    ++checked;
  }
  CHECK(checked == 800);
}

TEST_CASE("zigzag with the canonical basis flips one sign per event") {
  const DiagonalGaussian target = standard_gaussian(4);
  ZigZagOptions zz;
  RunOptions options;
  options.max_events = 2000;
  Rng rng(68);
  const Trajectory traj = run_zigzag(target, zz, options, rng);
  for (std::size_t s = 0; s + 1 < traj.segments.size(); ++s) {
    const Vec& y = traj.segments[s].direction;
    for (int i = 0; i < 4; ++i) CHECK(std::abs(std::abs(y[i]) - 1.0) < 1e-12);
    const Vec diff = traj.segments[s + 1].direction - y;
    int flipped = 0;
    for (int i = 0; i < 4; ++i) {
      if (diff[i] != 0.0) ++flipped;
    }
    CHECK(flipped == 1);
  }
}

TEST_CASE("zigzag random basis keeps the squared speed equal to d") {
  const DiagonalGaussian target = standard_gaussian(4);
  ZigZagOptions zz;
  zz.basis = ZigZagBasis::RandomOrthogonal;
  zz.basis_seed = 5;
  RunOptions options;
  options.max_events = 300;
  Rng rng(69);
  const Trajectory traj = run_zigzag(target, zz, options, rng);
  for (const auto& seg : traj.segments) {
    CHECK(seg.direction.squaredNorm() == doctest::Approx(4.0).epsilon(1e-10));
  }
  // same seed, same basis; different seed, different basis
  Rng rng2(69);
  const Trajectory again = run_zigzag(target, zz, options, rng2);
  CHECK((traj.segments[0].direction - again.segments[0].direction).norm() == 0.0);
  zz.basis_seed = 6;
  Rng rng3(69);
  const Trajectory other = run_zigzag(target, zz, options, rng3);
  CHECK((traj.segments[0].direction - other.segments[0].direction).norm() > 1e-8);
}

TEST_CASE("zigzag event times on the gaussian satisfy their defining integral") {
  const DiagonalGaussian target(build_anisotropic_gaussian(3));
  ZigZagOptions zz;
  RunOptions options;
  options.max_events = 500;
  options.initial_position = Vec::Constant(3, 2.0);
  Rng rng(70);
  const Trajectory traj = run_zigzag(target, zz, options, rng);
  // Every event ends a segment; the flipped coordinate's rate integral over
  // the segment must equal the consumed budget. The final event has no
  // out-segment (capped runs stop on the event), so it cannot be checked.
  int checked = 0;
  for (const auto& ev : traj.events) {
    const int s = segment_ending_at(traj, ev.time);
    REQUIRE(s >= 0);
    if (s + 1 >= static_cast<int>(traj.segments.size())) continue;
    const auto& seg = traj.segments[s];
    const Vec diff = traj.segments[s + 1].direction - seg.direction;
    int flipped = -1;
    for (int i = 0; i < 3; ++i) {
      if (diff[i] != 0.0) flipped = i;
    }
    REQUIRE(flipped >= 0);
    // coordinate rate: max(0, theta_i (x_i + t y_i) / var_i) with theta the
    // direction sign on that coordinate
    const double inv = target.inverse_variances()[flipped];
    const double yi = seg.direction[flipped];
    const double a = yi * seg.position[flipped] * inv;
    const double b = yi * yi * inv;
    const double T = seg.duration;
    const double lo = std::clamp(-a / b, 0.0, T);
    const double mass = a * (T - lo) + 0.5 * b * (T * T - lo * lo);
    CHECK(mass == doctest::Approx(ev.budget).epsilon(1e-7));
    ++checked;
  }
  CHECK(checked == 499);
}

TEST_CASE("factorized identity kernels reflect about the factor gradient") {
  const auto dir = std::filesystem::temp_directory_path() / "fec_sampler_tests";
  std::filesystem::create_directories(dir);
  const std::string path = testutil::ensure_dataset(dir.string(), 101);
  LogisticDataset data = load_uci_csv(path, -1, true, true);
  const LogisticPosterior post(std::move(data), 1000.0);
  const int d = post.dim();

  RunOptions options;
  options.max_events = 400;
  Rng rng(71);
  const Trajectory traj = run_factorized(post, bps_kernels(d), RefreshStrategy{},
                                         options, rng);
  REQUIRE(traj.gradient_events == 400);
  int checked = 0;
  for (const auto& ev : traj.events) {
    if (ev.kind != EventKind::GradientEvent) continue;
    REQUIRE(ev.factor >= 0);
    const int s = segment_ending_at(traj, ev.time);
    REQUIRE(s >= 0);
    if (s + 1 >= static_cast<int>(traj.segments.size())) continue;
    const Vec x = segment_end(traj.segments[s]);
    const Vec y_in = traj.segments[s].direction;
    const Vec y_out = traj.segments[s + 1].direction;
    const Vec grad = post.factor_gradient(ev.factor, x);
    const Vec n = grad / grad.norm();
    const Vec reflected = y_in - 2.0 * n.dot(y_in) * n;
    CHECK((y_out - reflected).norm() < 1e-10);
    ++checked;
  }
  CHECK(checked == 399);
}

TEST_CASE("driver rejects mismatched target and options") {
  const auto dir = std::filesystem::temp_directory_path() / "fec_sampler_tests";
  std::filesystem::create_directories(dir);
  const std::string path = testutil::ensure_dataset(dir.string(), 102);
  LogisticDataset data = load_uci_csv(path, -1, true, true);
  const LogisticPosterior post(std::move(data), 1000.0);
  const DiagonalGaussian gauss = standard_gaussian(3);

  RunOptions options;
  options.max_events = 10;
  Rng rng(72);
  CHECK_THROWS_AS(run_forward_ec(post, bps_kernels(post.dim()),
                                 RefreshStrategy{}, options, rng),
                  std::invalid_argument);

  RunOptions unbounded;  // neither horizon nor event cap
  CHECK_THROWS_AS(run_forward_ec(gauss, bps_kernels(3), RefreshStrategy{},
                                 unbounded, rng),
                  std::invalid_argument);

  RunOptions wrongdim;
  wrongdim.max_events = 10;
  wrongdim.initial_position = Vec::Zero(5);
  CHECK_THROWS_AS(run_forward_ec(gauss, bps_kernels(3), RefreshStrategy{},
                                 wrongdim, rng),
                  std::invalid_argument);

  RunOptions zdir;
  zdir.max_events = 10;
  zdir.initial_direction = Vec::Constant(3, 1.0);
  CHECK_THROWS_AS(run_zigzag(gauss, ZigZagOptions{}, zdir, rng),
                  std::invalid_argument);
}

TEST_CASE("discretize matches the streaming discretizer") {
  const DiagonalGaussian target = standard_gaussian(3);
  RunOptions options;
  options.time_horizon = 60.0;
  Rng rng(73);
  const Trajectory traj = run_forward_ec(target, forward_kernels(3),
                                         RefreshStrategy{}, options, rng);
  const SampleSeries direct = discretize(traj, 0.7);

  StreamingDiscretizer stream(3, 0.7);
  for (const auto& seg : traj.segments) {
    stream.on_segment(seg.start_time, seg.position, seg.direction, seg.duration);
  }
  for (const auto& ev : traj.events) stream.on_event(ev);
  stream.on_finish(traj.total_time);
  const SampleSeries streamed = stream.take();

  REQUIRE(direct.sample_count == streamed.sample_count);
  CHECK((direct.positions - streamed.positions).norm() == 0.0);
  CHECK(direct.event_count == streamed.event_count);
  CHECK(direct.events_per_sample == doctest::Approx(streamed.events_per_sample));
}

TEST_CASE("discretizer keeps the boundary sample on an exact grid") {
  const DiagonalGaussian target = standard_gaussian(2);
  RunOptions options;
  options.time_horizon = 12.0;
  Rng rng(74);
  StreamingDiscretizer sink(2, 3.0);
  drive_forward_ec(target, forward_kernels(2), RefreshStrategy{}, options, rng,
                   sink);
  const SampleSeries series = sink.take();
  CHECK(series.sample_count == 4);  // 3, 6, 9, 12
  CHECK(series.total_time == doctest::Approx(12.0));
}

TEST_CASE("discretizer skip drops the burn-in stretch") {
  const DiagonalGaussian target = standard_gaussian(2);
  RunOptions options;
  options.time_horizon = 50.0;
  Rng rng(75);
  const Trajectory traj = run_forward_ec(target, forward_kernels(2),
                                         RefreshStrategy{}, options, rng);
  StreamingDiscretizer sink(2, 1.0, 20.0);
  for (const auto& seg : traj.segments) {
    sink.on_segment(seg.start_time, seg.position, seg.direction, seg.duration);
  }
  sink.on_finish(traj.total_time);
  const SampleSeries series = sink.take();
  CHECK(series.sample_count == 30);  // 21..50
  // first retained sample equals the trajectory state at t = 21
  double t = 21.0;
  Vec expect;
  for (const auto& seg : traj.segments) {
    if (seg.start_time + seg.duration >= t) {
      expect = seg.position + (t - seg.start_time) * seg.direction;
      break;
    }
  }
  CHECK((series.positions.row(0).transpose() - expect).norm() < 1e-9);
}

TEST_CASE("presets wire the documented kernel combinations") {
  DirectionLaw law{DirectionMode::UnitSphere, 6};
  const SamplerConfig all = make_preset(Preset::ForwardRefAll, law);
  CHECK(!all.zigzag);
  CHECK(all.kernels.parallel.variant == ParallelVariant::Direct);
  CHECK(all.kernels.orthogonal.variant == OrthogonalVariant::Switch);
  CHECK(all.kernels.orthogonal.polarity == Polarity::Positive);
  CHECK(all.refresh.variant == RefreshVariant::None);

  const SamplerConfig ref = make_preset(Preset::ForwardRef, law, 2.0);
  CHECK(ref.refresh.variant == RefreshVariant::FixedTimeFlag);
  CHECK(ref.refresh.period == 2.0);
  CHECK(ref.kernels.orthogonal.variant == OrthogonalVariant::Switch);

  const SamplerConfig full = make_preset(Preset::ForwardFullRef, law, 3.0);
  CHECK(full.refresh.variant == RefreshVariant::FixedTimeFull);
  CHECK(full.kernels.orthogonal.variant == OrthogonalVariant::Identity);

  const SamplerConfig bps = make_preset(Preset::BpsFullRef, law, 3.0);
  CHECK(bps.kernels.parallel.variant == ParallelVariant::Identity);
  CHECK(bps.refresh.variant == RefreshVariant::FixedTimeFull);

  const SamplerConfig noref = make_preset(Preset::ForwardNoRef, law);
  CHECK(noref.kernels.orthogonal.variant == OrthogonalVariant::Identity);
  CHECK(noref.refresh.variant == RefreshVariant::None);

  const SamplerConfig zz = make_preset(Preset::ZigZagRandom, law);
  CHECK(zz.zigzag);
  CHECK(zz.zz.basis == ZigZagBasis::RandomOrthogonal);

  CHECK_THROWS_AS(make_preset(Preset::ForwardRef, law, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_preset(Preset::BpsFullRef, law, -1.0),
                  std::invalid_argument);
}

TEST_CASE("run_config dispatches by preset and capability") {
  const auto dir = std::filesystem::temp_directory_path() / "fec_sampler_tests";
  std::filesystem::create_directories(dir);
  const std::string path = testutil::ensure_dataset(dir.string(), 103);
  LogisticDataset data = load_uci_csv(path, -1, true, true);
  const LogisticPosterior post(std::move(data), 1000.0);

  RunOptions options;
  options.max_events = 50;
  Rng rng(76);
  DirectionLaw law{DirectionMode::UnitSphere, post.dim()};
  const Trajectory t1 =
      run_config(post, make_preset(Preset::ForwardNoRef, law), options, rng);
  CHECK(t1.gradient_events == 50);
  for (const auto& ev : t1.events) CHECK(ev.factor >= 0);  // factorized path

  const DiagonalGaussian gauss = standard_gaussian(3);
  DirectionLaw law3{DirectionMode::UnitSphere, 3};
  const Trajectory t2 =
      run_config(gauss, make_preset(Preset::ZigZag, law3), options, rng);
  CHECK(t2.gradient_events == 50);
  for (const auto& seg : t2.segments) {
    CHECK(std::abs(std::abs(seg.direction[0]) - 1.0) < 1e-12);
  }
}

TEST_CASE("forward sampler is stationary on the standard gaussian, smoke scale") {
  const DiagonalGaussian target = standard_gaussian(3);
  RunOptions options;
  options.max_events = 60000;
  Rng rng(77);
  StreamingDiscretizer sink(3, 0.5, 50.0);
  drive_forward_ec(target, forward_kernels(3), RefreshStrategy{}, options, rng,
                   sink);
  const SampleSeries series = sink.take();
  REQUIRE(series.sample_count > 5000);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> col(series.positions.col(i).data(),
                            series.positions.col(i).data() + series.sample_count);
    // crude autocorrelation-insensitive bands: batch means over 40 batches
    const long B = 40;
    const long per = series.sample_count / B;
    std::vector<double> batch(B, 0.0);
    for (long b = 0; b < B; ++b) {
      for (long j = 0; j < per; ++j) batch[b] += col[b * per + j];
      batch[b] /= static_cast<double>(per);
    }
    const double m = testutil::mean(batch);
    const double se = std::sqrt(testutil::sample_variance(batch) / B);
    CHECK(std::abs(m) < 5.0 * se + 0.05);
    const double var = testutil::sample_variance(col);
    CHECK(var == doctest::Approx(1.0).epsilon(0.12));
  }
}
