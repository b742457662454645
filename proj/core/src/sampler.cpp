#include "fec/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

namespace fec {

void validate_refresh(const RefreshStrategy& refresh) {
  switch (refresh.variant) {
    case RefreshVariant::None:
      return;
    case RefreshVariant::Poisson:
      if (!(refresh.rate > 0.0) || !std::isfinite(refresh.rate)) {
        throw std::invalid_argument("poisson refresh needs a positive rate");
      }
      return;
    case RefreshVariant::FixedTimeFull:
    case RefreshVariant::FixedTimeFlag:
      if (!(refresh.period > 0.0) || !std::isfinite(refresh.period)) {
        throw std::invalid_argument("fixed-time refresh needs a positive period");
      }
      return;
  }
  throw std::logic_error("unreachable refresh variant");
}

void TrajectoryRecorder::on_segment(double start_time, const Vec& position,
                                    const Vec& direction, double duration) {
  trajectory_.segments.push_back({start_time, position, direction, duration});
}

void TrajectoryRecorder::on_event(const TrajectoryEvent& event) {
  trajectory_.events.push_back(event);
  if (event.kind == EventKind::GradientEvent) ++trajectory_.gradient_events;
  if (event.kind == EventKind::Refresh) ++trajectory_.refresh_events;
}

void TrajectoryRecorder::on_finish(double total_time) {
  trajectory_.total_time = total_time;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Event machinery for one sampler family: event-time draws along the current
// ray plus the state update at an event.
class EventModel {
public:
  virtual ~EventModel() = default;
  virtual void reset_line(const Vec& x, const Vec& y) = 0;
  virtual void advance_line(double dt) { (void)dt; }
  virtual EventDraw draw(const Vec& x, const Vec& y, double cap, Rng& rng) = 0;
  virtual void apply_event(const Vec& x, Vec& y, int factor, bool primary,
                           Rng& rng) = 0;
  virtual Vec fresh_direction(Rng& rng) = 0;
};

void event_loop(EventModel& model, int dim, const RefreshStrategy& refresh,
                const RunOptions& opt, Rng& rng, SegmentSink& sink) {
  validate_refresh(refresh);
  if (std::isnan(opt.time_horizon) || opt.time_horizon < 0.0) {
    throw std::invalid_argument("run: bad time horizon");
  }
  if (std::isinf(opt.time_horizon) && opt.max_events < 0) {
    throw std::invalid_argument("run: need a time horizon or an event cap");
  }
  Vec x = opt.initial_position.size() > 0 ? opt.initial_position : Vec::Zero(dim);
  if (x.size() != dim) {
    throw std::invalid_argument("run: initial position has wrong dimension");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("run: initial position not finite");
  }
  Vec y = opt.initial_direction ? *opt.initial_direction : model.fresh_direction(rng);
  if (y.size() != dim || !y.allFinite()) {
    throw std::invalid_argument("run: bad initial direction");
  }

  const double horizon = opt.time_horizon;
  double t = 0.0;
  long events = 0;
  bool primary = true;  // flag scheme: arm the full kernel pair
  double next_reset = refresh.variant == RefreshVariant::FixedTimeFlag
                          ? refresh.period
                          : kInf;
  double refresh_remaining = kInf;
  if (refresh.variant == RefreshVariant::Poisson) {
    refresh_remaining = rng.exponential() / refresh.rate;
  } else if (refresh.variant == RefreshVariant::FixedTimeFull) {
    refresh_remaining = refresh.period;
  }

  bool done = horizon == 0.0 || opt.max_events == 0;
  if (!done) model.reset_line(x, y);
  while (!done) {
    const double to_horizon = horizon - t;
    const double to_reset = next_reset - t;
    const double cap = std::min({to_horizon, to_reset, refresh_remaining});
    const EventDraw ev = model.draw(x, y, cap, rng);

    enum class Winner { Horizon, Gradient, Refresh, Reset } win;
    double dt;
    if (to_horizon <= ev.time && to_horizon <= refresh_remaining &&
        to_horizon <= to_reset) {
      win = Winner::Horizon;
      dt = to_horizon;
    } else if (ev.time <= refresh_remaining && ev.time <= to_reset) {
      win = Winner::Gradient;
      dt = ev.time;
    } else if (refresh_remaining <= to_reset) {
      win = Winner::Refresh;
      dt = refresh_remaining;
    } else {
      win = Winner::Reset;
      dt = to_reset;
    }
    if (!std::isfinite(dt)) {
      throw std::runtime_error("run: no finite event, refresh, or bound ahead");
    }

    sink.on_segment(t, x, y, dt);
    x += dt * y;
    t += dt;
    if (!x.allFinite()) {
      throw std::runtime_error("run: position diverged to non-finite values");
    }

    switch (win) {
      case Winner::Horizon:
        t = horizon;
        done = true;
        break;
      case Winner::Gradient: {
        model.advance_line(dt);
        model.apply_event(x, y, ev.factor, primary, rng);
        model.reset_line(x, y);
        sink.on_event({t, EventKind::GradientEvent, ev.factor, ev.budget, primary});
        if (refresh.variant == RefreshVariant::FixedTimeFlag) primary = false;
        refresh_remaining = std::max(0.0, refresh_remaining - dt);
        ++events;
        break;
      }
      case Winner::Refresh: {
        y = model.fresh_direction(rng);
        model.reset_line(x, y);
        sink.on_event({t, EventKind::Refresh, -1, kNaN, false});
        refresh_remaining = refresh.variant == RefreshVariant::Poisson
                                ? rng.exponential() / refresh.rate
                                : refresh.period;
        ++events;
        break;
      }
      case Winner::Reset: {
        model.advance_line(dt);
        sink.on_event({t, EventKind::FlagReset, -1, kNaN, false});
        primary = true;
        next_reset += refresh.period;
        refresh_remaining = std::max(0.0, refresh_remaining - dt);
        break;
      }
    }
    if (!done && opt.max_events >= 0 && events >= opt.max_events) done = true;
  }
  sink.on_finish(t);
}

// Kernel pair for the flag scheme: the primary spec fires on the first event
// of each period, afterwards the orthogonal part is left alone.
struct KernelPair {
  KernelSpec primary;
  KernelSpec secondary;

  explicit KernelPair(const KernelSpec& spec) : primary(spec), secondary(spec) {
    secondary.orthogonal.variant = OrthogonalVariant::Identity;
  }

  const KernelSpec& pick(bool use_primary) const {
    return use_primary ? primary : secondary;
  }
};

class GaussianForwardModel : public EventModel {
public:
  GaussianForwardModel(const DiagonalGaussian& target, const KernelSpec& spec)
      : target_(target), pair_(spec), law_(spec.law) {}

  void reset_line(const Vec& x, const Vec& y) override {
    wy_ = target_.inverse_variances().cwiseProduct(y);
    slope_ = wy_.dot(y);
    level_ = wy_.dot(x);
  }
  void advance_line(double dt) override { level_ += slope_ * dt; }
  EventDraw draw(const Vec&, const Vec&, double, Rng& rng) override {
    if (slope_ <= 0.0) return {};
    const double e = rng.exponential();
    return {linear_rate_event_time(level_, slope_, e), -1, e};
  }
  void apply_event(const Vec& x, Vec& y, int, bool use_primary, Rng& rng) override {
    const GradientFrame frame = make_frame(target_.gradient(x));
    y = assemble_direction(pair_.pick(use_primary), frame, y, rng);
  }
  Vec fresh_direction(Rng& rng) override { return sample_direction(law_, rng); }

private:
  const DiagonalGaussian& target_;
  KernelPair pair_;
  DirectionLaw law_;
  Vec wy_;
  double slope_ = 0.0, level_ = 0.0;
};

class MixtureForwardModel : public EventModel {
public:
  MixtureForwardModel(const GaussianMixture& target, const KernelSpec& spec)
      : target_(target), pair_(spec), law_(spec.law) {}

  void reset_line(const Vec&, const Vec&) override {}
  EventDraw draw(const Vec& x, const Vec& y, double cap, Rng& rng) override {
    return target_.thinned_event_time(x, y, rng, cap);
  }
  void apply_event(const Vec& x, Vec& y, int, bool use_primary, Rng& rng) override {
    const GradientFrame frame = make_frame(target_.gradient(x));
    y = assemble_direction(pair_.pick(use_primary), frame, y, rng);
  }
  Vec fresh_direction(Rng& rng) override { return sample_direction(law_, rng); }

private:
  const GaussianMixture& target_;
  KernelPair pair_;
  DirectionLaw law_;
};

// Factorized model via the target's virtual factor interface.
class GenericFactorizedModel : public EventModel {
public:
  GenericFactorizedModel(const TargetModel& target, const KernelSpec& spec)
      : target_(target), pair_(spec), law_(spec.law) {}

  void reset_line(const Vec&, const Vec&) override {}
  EventDraw draw(const Vec& x, const Vec& y, double, Rng& rng) override {
    EventDraw best;
    const int n = target_.factor_count();
    for (int i = 0; i < n; ++i) {
      const double e = rng.exponential();
      const double t = target_.factor_event_time(i, x, y, e);
      if (t < best.time) best = {t, i, e};
    }
    return best;
  }
  void apply_event(const Vec& x, Vec& y, int factor, bool use_primary,
                   Rng& rng) override {
    const GradientFrame frame = make_frame(target_.factor_gradient(factor, x));
    y = assemble_direction(pair_.pick(use_primary), frame, y, rng);
  }
  Vec fresh_direction(Rng& rng) override { return sample_direction(law_, rng); }

private:
  const TargetModel& target_;
  KernelPair pair_;
  DirectionLaw law_;
};

// Logistic posterior with incrementally maintained inner products
// A = X theta and B = X v, so a draw costs O(N) instead of O(N d). A full
// recompute of A every so often stops drift from the incremental updates.
class LogisticFactorizedModel : public EventModel {
public:
  LogisticFactorizedModel(const LogisticPosterior& target, const KernelSpec& spec)
      : target_(target), pair_(spec), law_(spec.law) {}

  void reset_line(const Vec& x, const Vec& y) override {
    const Mat& cov = target_.data().covariates;
    if (resets_since_recompute_ == 0) {
      a_ = cov * x;
    }
    if (++resets_since_recompute_ >= 65536) resets_since_recompute_ = 0;
    b_ = cov * y;
    prior_level_ = y.dot(x) / target_.prior_variance();
    prior_slope_ = y.squaredNorm() / target_.prior_variance();
  }
  void advance_line(double dt) override {
    a_ += dt * b_;
    prior_level_ += dt * prior_slope_;
  }
  EventDraw draw(const Vec&, const Vec&, double, Rng& rng) override {
    EventDraw best;
    {
      const double e = rng.exponential();
      const double t = prior_slope_ > 0.0
                           ? linear_rate_event_time(prior_level_, prior_slope_, e)
                           : kInf;
      if (t < best.time) best = {t, 0, e};
    }
    const auto& labels = target_.data().labels;
    const int n = static_cast<int>(labels.size());
    for (int i = 0; i < n; ++i) {
      const double e = rng.exponential();
      const double t = logistic_event_time_dots(labels[static_cast<std::size_t>(i)],
                                                a_[i], b_[i], e);
      if (t < best.time) best = {t, i + 1, e};
    }
    return best;
  }
  void apply_event(const Vec& x, Vec& y, int factor, bool use_primary,
                   Rng& rng) override {
    const GradientFrame frame = make_frame(target_.factor_gradient(factor, x));
    y = assemble_direction(pair_.pick(use_primary), frame, y, rng);
  }
  Vec fresh_direction(Rng& rng) override { return sample_direction(law_, rng); }

private:
  const LogisticPosterior& target_;
  KernelPair pair_;
  DirectionLaw law_;
  Vec a_, b_;
  double prior_level_ = 0.0, prior_slope_ = 0.0;
  long resets_since_recompute_ = 0;
};

}  // namespace

void drive_forward_ec(const TargetModel& target, const KernelSpec& kernels,
                      const RefreshStrategy& refresh, const RunOptions& options,
                      Rng& rng, SegmentSink& sink) {
  validate_kernels(kernels);
  if (kernels.law.dim != target.dim()) {
    throw std::invalid_argument("run_forward_ec: law/target dimension mismatch");
  }
  switch (target.capability()) {
    case EventCapability::ExactQuadratic: {
      const auto& gauss = dynamic_cast<const DiagonalGaussian&>(target);
      GaussianForwardModel model(gauss, kernels);
      event_loop(model, target.dim(), refresh, options, rng, sink);
      return;
    }
    case EventCapability::Thinning: {
      const auto* mix = dynamic_cast<const GaussianMixture*>(&target);
      if (!mix) {
        throw std::invalid_argument(
            "run_forward_ec: thinning target without a thinning solver");
      }
      MixtureForwardModel model(*mix, kernels);
      event_loop(model, target.dim(), refresh, options, rng, sink);
      return;
    }
    case EventCapability::ExactFactorized:
      throw std::invalid_argument(
          "run_forward_ec: target only supports factorized event times; use "
          "run_factorized");
  }
}

void drive_factorized(const TargetModel& target, const KernelSpec& kernels,
                      const RefreshStrategy& refresh, const RunOptions& options,
                      Rng& rng, SegmentSink& sink) {
  validate_kernels(kernels);
  if (kernels.law.dim != target.dim()) {
    throw std::invalid_argument("run_factorized: law/target dimension mismatch");
  }
  if (target.factor_count() < 1) {
    throw std::invalid_argument("run_factorized: target has no factors");
  }
  if (const auto* logistic = dynamic_cast<const LogisticPosterior*>(&target)) {
    LogisticFactorizedModel model(*logistic, kernels);
    event_loop(model, target.dim(), refresh, options, rng, sink);
  } else {
    GenericFactorizedModel model(target, kernels);
    event_loop(model, target.dim(), refresh, options, rng, sink);
  }
}

Trajectory run_forward_ec(const TargetModel& target, const KernelSpec& kernels,
                          const RefreshStrategy& refresh,
                          const RunOptions& options, Rng& rng) {
  TrajectoryRecorder recorder;
  drive_forward_ec(target, kernels, refresh, options, rng, recorder);
  return recorder.take();
}

Trajectory run_factorized(const TargetModel& target, const KernelSpec& kernels,
                          const RefreshStrategy& refresh,
                          const RunOptions& options, Rng& rng) {
  TrajectoryRecorder recorder;
  drive_factorized(target, kernels, refresh, options, rng, recorder);
  return recorder.take();
}

namespace {

Mat zigzag_basis(const TargetModel& target, const ZigZagOptions& zz) {
  const int d = target.dim();
  if (zz.basis == ZigZagBasis::Canonical) return Mat::Identity(d, d);
  Rng rng(zz.basis_seed);
  Mat gauss(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) gauss(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(gauss);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

// Per-basis-vector event times and sign flips. Subclasses supply the
// per-coordinate first-arrival draw.
class ZigZagModel : public EventModel {
public:
  ZigZagModel(const TargetModel& target, Mat basis)
      : target_(target), basis_(std::move(basis)),
        signs_(Eigen::VectorXi::Ones(target.dim())) {}

  void apply_event(const Vec&, Vec& y, int factor, bool, Rng&) override {
    signs_[factor] = -signs_[factor];
    y += 2.0 * signs_[factor] * basis_.col(factor);
  }
  Vec fresh_direction(Rng& rng) override {
    for (int i = 0; i < signs_.size(); ++i) {
      signs_[i] = rng.bernoulli(0.5) ? 1 : -1;
    }
    return basis_ * signs_.cast<double>();
  }

protected:
  const TargetModel& target_;
  Mat basis_;
  Eigen::VectorXi signs_;
};

class GaussianZigZagModel : public ZigZagModel {
public:
  GaussianZigZagModel(const DiagonalGaussian& target, Mat basis)
      : ZigZagModel(target, std::move(basis)), gauss_(target) {}

  void reset_line(const Vec& x, const Vec& y) override {
    const int d = gauss_.dim();
    const Vec wx = gauss_.inverse_variances().cwiseProduct(x);
    const Vec wy = gauss_.inverse_variances().cwiseProduct(y);
    level_.resize(d);
    slope_.resize(d);
    for (int k = 0; k < d; ++k) {
      level_[k] = signs_[k] * basis_.col(k).dot(wx);
      slope_[k] = signs_[k] * basis_.col(k).dot(wy);
    }
  }
  void advance_line(double dt) override { level_ += dt * slope_; }
  EventDraw draw(const Vec&, const Vec&, double, Rng& rng) override {
    EventDraw best;
    for (int k = 0; k < level_.size(); ++k) {
      const double e = rng.exponential();
      const double t = linear_rate_event_time(level_[k], slope_[k], e);
      if (t < best.time) best = {t, k, e};
    }
    return best;
  }

private:
  const DiagonalGaussian& gauss_;
  Vec level_, slope_;
};

class MixtureZigZagModel : public ZigZagModel {
public:
  MixtureZigZagModel(const GaussianMixture& target, Mat basis)
      : ZigZagModel(target, std::move(basis)), mix_(target) {}

  void reset_line(const Vec&, const Vec&) override {}
  EventDraw draw(const Vec& x, const Vec& y, double cap, Rng& rng) override {
    const int d = mix_.dim();
    // Envelope per coordinate: sum over components of linear rates.
    Mat level(5, d), slope(5, d);
    for (int j = 0; j < 5; ++j) {
      const Vec w = mix_.component_inverse_variances(j);
      const Vec wx = w.cwiseProduct(x - mix_.spec().means[j]);
      const Vec wy = w.cwiseProduct(y);
      for (int k = 0; k < d; ++k) {
        level(j, k) = signs_[k] * basis_.col(k).dot(wx);
        slope(j, k) = signs_[k] * basis_.col(k).dot(wy);
      }
    }
    double elapsed = 0.0;
    for (long iter = 0;; ++iter) {
      if (iter > 100000000L) {
        throw std::runtime_error("zigzag thinning loop stuck");
      }
      double step = kInf;
      int k_star = -1;
      for (int k = 0; k < d; ++k) {
        for (int j = 0; j < 5; ++j) {
          const double t =
              linear_rate_event_time(level(j, k), slope(j, k), rng.exponential());
          if (t < step) {
            step = t;
            k_star = k;
          }
        }
      }
      elapsed += step;
      if (elapsed > cap) return {kInf, -1, kNaN};
      level += step * slope;
      double envelope = 0.0;
      for (int j = 0; j < 5; ++j) envelope += std::max(0.0, level(j, k_star));
      if (envelope <= 0.0) continue;
      const Vec xc = x + elapsed * y;
      const double true_rate = std::max(
          0.0, signs_[k_star] * basis_.col(k_star).dot(mix_.gradient(xc)));
      if (rng.uniform() < true_rate / envelope) {
        return {elapsed, k_star, kNaN};
      }
    }
  }

private:
  const GaussianMixture& mix_;
};

// Fallback for targets with only gradient access: window-by-window numerical
// inversion of each coordinate rate.
class NumericZigZagModel : public ZigZagModel {
public:
  using ZigZagModel::ZigZagModel;

  void reset_line(const Vec&, const Vec&) override {}
  EventDraw draw(const Vec& x, const Vec& y, double cap, Rng& rng) override {
    const int d = target_.dim();
    EventDraw best;
    for (int k = 0; k < d; ++k) {
      const double e = rng.exponential();
      const auto rate = [&](double t) {
        return std::max(0.0,
                        signs_[k] * basis_.col(k).dot(target_.gradient(x + t * y)));
      };
      double base = 0.0, budget = e, window = 1.0;
      double t_k = kInf;
      const double limit = std::min({cap, best.time, 1e12});
      while (base <= limit) {
        const auto shifted = [&](double t) { return rate(base + t); };
        const double mass = adaptive_simpson(shifted, 0.0, window, 1e-10);
        if (budget <= mass) {
          t_k = base + oracle_event_time(shifted, budget, window);
          break;
        }
        budget -= mass;
        base += window;
        window *= 2.0;
      }
      if (t_k < best.time) best = {t_k, k, e};
    }
    return best;
  }
};

}  // namespace

void drive_zigzag(const TargetModel& target, const ZigZagOptions& zz,
                  const RunOptions& options, Rng& rng, SegmentSink& sink) {
  if (options.initial_direction) {
    throw std::invalid_argument(
        "run_zigzag: the direction is a signed basis sum drawn internally");
  }
  Mat basis = zigzag_basis(target, zz);
  const int d = target.dim();
  if (const auto* gauss = dynamic_cast<const DiagonalGaussian*>(&target)) {
    GaussianZigZagModel model(*gauss, std::move(basis));
    event_loop(model, d, RefreshStrategy{}, options, rng, sink);
  } else if (const auto* mix = dynamic_cast<const GaussianMixture*>(&target)) {
    MixtureZigZagModel model(*mix, std::move(basis));
    event_loop(model, d, RefreshStrategy{}, options, rng, sink);
  } else {
    NumericZigZagModel model(target, std::move(basis));
    event_loop(model, d, RefreshStrategy{}, options, rng, sink);
  }
}

Trajectory run_zigzag(const TargetModel& target, const ZigZagOptions& zz,
                      const RunOptions& options, Rng& rng) {
  TrajectoryRecorder recorder;
  drive_zigzag(target, zz, options, rng, recorder);
  return recorder.take();
}

StreamingDiscretizer::StreamingDiscretizer(int dim, double step, double skip)
    : dim_(dim), step_(step), skip_(skip) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("discretize: step must be positive");
  }
  if (skip < 0.0) throw std::invalid_argument("discretize: negative skip");
}

void StreamingDiscretizer::on_segment(double start_time, const Vec& position,
                                      const Vec& direction, double duration) {
  const double end = start_time + duration;
  for (;;) {
    const double target = skip_ + static_cast<double>(next_index_) * step_;
    if (target > end) break;
    const double local = target - start_time;
    for (int i = 0; i < dim_; ++i) {
      data_.push_back(position[i] + local * direction[i]);
    }
    ++next_index_;
  }
  end_position_.resize(dim_);
  for (int i = 0; i < dim_; ++i) {
    end_position_[i] = position[i] + duration * direction[i];
  }
}

void StreamingDiscretizer::on_event(const TrajectoryEvent& event) {
  if (event.kind != EventKind::FlagReset && event.time > skip_) {
    ++events_in_span_;
  }
}

void StreamingDiscretizer::on_finish(double total_time) {
  total_time_ = total_time;
  // A sample sitting exactly on the trajectory end can be lost to rounding
  // when segment endpoints accumulate; recover it from the final position.
  const double target = skip_ + static_cast<double>(next_index_) * step_;
  if (end_position_.size() == dim_ && target <= total_time + 1e-9 * step_) {
    for (int i = 0; i < dim_; ++i) data_.push_back(end_position_[i]);
    ++next_index_;
  }
}

SampleSeries StreamingDiscretizer::take() {
  SampleSeries series;
  series.step = step_;
  series.total_time = total_time_;
  series.sample_count = next_index_ - 1;
  series.event_count = events_in_span_;
  series.empty = series.sample_count == 0;
  series.positions = Eigen::Map<
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data_.data(), series.sample_count, dim_);
  series.events_per_sample =
      series.sample_count > 0
          ? static_cast<double>(events_in_span_) / series.sample_count
          : 0.0;
  return series;
}

SampleSeries discretize(const Trajectory& trajectory, double step) {
  const int dim = trajectory.segments.empty()
                      ? 0
                      : static_cast<int>(trajectory.segments.front().position.size());
  StreamingDiscretizer disc(dim, step);
  for (const auto& seg : trajectory.segments) {
    disc.on_segment(seg.start_time, seg.position, seg.direction, seg.duration);
  }
  for (const auto& ev : trajectory.events) disc.on_event(ev);
  disc.on_finish(trajectory.total_time);
  return disc.take();
}

SamplerConfig make_preset(Preset preset, const DirectionLaw& law,
                          double refresh_period) {
  SamplerConfig config;
  config.kernels.law = law;
  const auto need_period = [&] {
    if (!(refresh_period > 0.0) || !std::isfinite(refresh_period)) {
      throw std::invalid_argument("preset requires a positive refresh period");
    }
  };
  auto& par = config.kernels.parallel;
  auto& orth = config.kernels.orthogonal;
  switch (preset) {
    case Preset::ForwardNoRef:
      par.variant = ParallelVariant::Direct;
      break;
    case Preset::ForwardRefAll:
      par.variant = ParallelVariant::Direct;
      orth.variant = OrthogonalVariant::Switch;
      orth.polarity = Polarity::Positive;
      break;
    case Preset::ForwardRef:
      need_period();
      par.variant = ParallelVariant::Direct;
      orth.variant = OrthogonalVariant::Switch;
      orth.polarity = Polarity::Positive;
      config.refresh = {RefreshVariant::FixedTimeFlag, 0.0, refresh_period};
      break;
    case Preset::ForwardFullRef:
      need_period();
      par.variant = ParallelVariant::Direct;
      config.refresh = {RefreshVariant::FixedTimeFull, 0.0, refresh_period};
      break;
    case Preset::BpsFullRef:
      need_period();
      par.variant = ParallelVariant::Identity;
      config.refresh = {RefreshVariant::FixedTimeFull, 0.0, refresh_period};
      break;
    case Preset::BpsNoRef:
      par.variant = ParallelVariant::Identity;
      break;
    case Preset::ZigZag:
      config.zigzag = true;
      config.zz.basis = ZigZagBasis::Canonical;
      break;
    case Preset::ZigZagRandom:
      config.zigzag = true;
      config.zz.basis = ZigZagBasis::RandomOrthogonal;
      break;
  }
  return config;
}

void drive_config(const TargetModel& target, const SamplerConfig& config,
                  const RunOptions& options, Rng& rng, SegmentSink& sink) {
  if (config.zigzag) {
    drive_zigzag(target, config.zz, options, rng, sink);
  } else if (target.capability() == EventCapability::ExactFactorized) {
    drive_factorized(target, config.kernels, config.refresh, options, rng, sink);
  } else {
    drive_forward_ec(target, config.kernels, config.refresh, options, rng, sink);
  }
}

Trajectory run_config(const TargetModel& target, const SamplerConfig& config,
                      const RunOptions& options, Rng& rng) {
  TrajectoryRecorder recorder;
  drive_config(target, config, options, rng, recorder);
  return recorder.take();
}

}  // namespace fec
