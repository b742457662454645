#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fec/kernels.hpp"
#include "fec/model.hpp"

namespace fec {

enum class RefreshVariant {
  None,
  Poisson,        // refresh clock ~ Exp(rate), carried across events
  FixedTimeFull,  // full direction redraw every period
  FixedTimeFlag   // no redraw; a flag re-arms the primary kernel each period
};

struct RefreshStrategy {
  RefreshVariant variant = RefreshVariant::None;
  double rate = 0.0;
  double period = 0.0;
};

void validate_refresh(const RefreshStrategy& refresh);

enum class EventKind { GradientEvent, Refresh, FlagReset };

struct TrajectoryEvent {
  double time = 0.0;
  EventKind kind = EventKind::GradientEvent;
  int factor = -1;
  double budget = 0.0;       // Exp(1) variate consumed by the solver; NaN if n/a
  bool primary_kernel = false;  // flag scheme: event used the full kernel pair
};

struct TrajectorySegment {
  double start_time = 0.0;
  Vec position;
  Vec direction;
  double duration = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySegment> segments;
  std::vector<TrajectoryEvent> events;
  double total_time = 0.0;
  long gradient_events = 0;
  long refresh_events = 0;

  // Refreshes count as events; scheduled flag resets do not.
  long event_count() const { return gradient_events + refresh_events; }
};

// Streaming consumer of a run. Long runs go through this instead of a stored
// Trajectory so memory stays flat.
class SegmentSink {
public:
  virtual ~SegmentSink() = default;
  // The piece of trajectory from start_time flowing along direction for
  // duration, emitted before the state changes at its end.
  virtual void on_segment(double start_time, const Vec& position,
                          const Vec& direction, double duration) = 0;
  virtual void on_event(const TrajectoryEvent& event) { (void)event; }
  virtual void on_finish(double total_time) { (void)total_time; }
};

class TrajectoryRecorder : public SegmentSink {
public:
  void on_segment(double start_time, const Vec& position, const Vec& direction,
                  double duration) override;
  void on_event(const TrajectoryEvent& event) override;
  void on_finish(double total_time) override;
  Trajectory take() { return std::move(trajectory_); }

private:
  Trajectory trajectory_;
};

struct RunOptions {
  double time_horizon = kInf;
  long max_events = -1;  // -1 = unbounded; at least one bound is required
  Vec initial_position;  // empty = origin
  std::optional<Vec> initial_direction;  // default: drawn from the law
};

// Forward event-chain sampler on a monolithic target (exact quadratic or
// thinning event times). Throws std::invalid_argument for targets that only
// support factorized event times.
void drive_forward_ec(const TargetModel& target, const KernelSpec& kernels,
                      const RefreshStrategy& refresh, const RunOptions& options,
                      Rng& rng, SegmentSink& sink);
Trajectory run_forward_ec(const TargetModel& target, const KernelSpec& kernels,
                          const RefreshStrategy& refresh,
                          const RunOptions& options, Rng& rng);

// Factorized variant: events are triggered by individual factors and the
// event kernel sees only the triggering factor's gradient.
void drive_factorized(const TargetModel& target, const KernelSpec& kernels,
                      const RefreshStrategy& refresh, const RunOptions& options,
                      Rng& rng, SegmentSink& sink);
Trajectory run_factorized(const TargetModel& target, const KernelSpec& kernels,
                          const RefreshStrategy& refresh,
                          const RunOptions& options, Rng& rng);

enum class ZigZagBasis { Canonical, RandomOrthogonal };

struct ZigZagOptions {
  ZigZagBasis basis = ZigZagBasis::Canonical;
  std::uint64_t basis_seed = 1;  // RandomOrthogonal draws the basis from this
};

// Zig-Zag baseline: direction is a signed sum of basis vectors, events flip
// one sign. Exact per-coordinate solves on diagonal Gaussians, thinning on
// the mixture, numerical inversion otherwise.
void drive_zigzag(const TargetModel& target, const ZigZagOptions& zz,
                  const RunOptions& options, Rng& rng, SegmentSink& sink);
Trajectory run_zigzag(const TargetModel& target, const ZigZagOptions& zz,
                      const RunOptions& options, Rng& rng);

// Positions read off a trajectory at times step, 2 step, ..., n step.
struct SampleSeries {
  double step = 0.0;
  Mat positions;  // one row per sample
  long sample_count = 0;
  long event_count = 0;          // events inside the sampled span
  double events_per_sample = 0.0;
  double total_time = 0.0;
  bool empty = false;  // step exceeded the trajectory length
};

// Streaming discretizer; skip drops an initial stretch of trajectory before
// the sample grid starts.
class StreamingDiscretizer : public SegmentSink {
public:
  StreamingDiscretizer(int dim, double step, double skip = 0.0);

  void on_segment(double start_time, const Vec& position, const Vec& direction,
                  double duration) override;
  void on_event(const TrajectoryEvent& event) override;
  void on_finish(double total_time) override;

  SampleSeries take();

private:
  int dim_;
  double step_, skip_;
  long next_index_ = 1;  // next sample sits at skip_ + next_index_ * step_
  long events_in_span_ = 0;
  double total_time_ = 0.0;
  std::vector<double> data_;
  Vec end_position_;
};

SampleSeries discretize(const Trajectory& trajectory, double step);

// Named sampler configurations used throughout the experiments.
enum class Preset {
  ForwardNoRef,    // direct parallel, identity orthogonal, no refresh
  ForwardRefAll,   // direct parallel, positive switch at every event
  ForwardRef,      // direct parallel, positive switch re-armed once per period
  ForwardFullRef,  // direct parallel, full direction redraw every period
  BpsFullRef,      // pure reflection with full redraw every period
  BpsNoRef,        // pure reflection only
  ZigZag,
  ZigZagRandom
};

struct SamplerConfig {
  bool zigzag = false;
  KernelSpec kernels;
  RefreshStrategy refresh;
  ZigZagOptions zz;
};

// refresh_period is required (positive) for the presets with a clock and
// ignored by the others.
SamplerConfig make_preset(Preset preset, const DirectionLaw& law,
                          double refresh_period = 0.0);

// Dispatches to the right driver for the preset/target combination.
Trajectory run_config(const TargetModel& target, const SamplerConfig& config,
                      const RunOptions& options, Rng& rng);
void drive_config(const TargetModel& target, const SamplerConfig& config,
                  const RunOptions& options, Rng& rng, SegmentSink& sink);

}  // namespace fec
