#include "fec/events.hpp"

#include <cmath>
#include <stdexcept>

namespace fec {

double linear_rate_event_time(double a, double b, double e) {
  if (e < 0.0 || !std::isfinite(e)) {
    throw std::invalid_argument("linear_rate_event_time: bad budget");
  }
  if (e == 0.0) return 0.0;
  if (b == 0.0) {
    return a > 0.0 ? e / a : kInf;
  }
  if (b > 0.0) {
    if (a >= 0.0) {
      // Root of (b/2) T^2 + a T - e, written to avoid cancellation.
      return 2.0 * e / (a + std::sqrt(a * a + 2.0 * b * e));
    }
    // Rate is zero until t* = -a/b, then grows linearly.
    return -a / b + std::sqrt(2.0 * e / b);
  }
  // b < 0: rate hits zero at -a/b and stays there; total mass a^2 / (-2b).
  if (a <= 0.0) return kInf;
  if (2.0 * b * e + a * a <= 0.0) return kInf;
  return 2.0 * e / (a + std::sqrt(a * a + 2.0 * b * e));
}

EventDraw quadratic_event_time(const QuadraticLineRate& line, double e) {
  if (!(line.u0 > 0.0)) {
    throw std::invalid_argument("quadratic_event_time: u0 must be positive");
  }
  EventDraw draw;
  draw.time = linear_rate_event_time(2.0 * line.u0 * line.t0, 2.0 * line.u0, e);
  draw.budget = e;
  return draw;
}

namespace {

double log_expm1(double e) {
  // log(exp(e) - 1), stable for both small and large e.
  return e > 0.693 ? e + std::log1p(-std::exp(-e)) : std::log(std::expm1(e));
}

double log_add_exp(double x, double y) {
  const double m = std::max(x, y);
  if (!std::isfinite(m)) return m;
  return m + std::log1p(std::exp(std::min(x, y) - m));
}

}  // namespace

double logistic_event_time_dots(int label, double theta_dot_x, double v_dot_x,
                                double e) {
  if (label != 0 && label != 1) {
    throw std::invalid_argument("logistic_event_time: label must be 0 or 1");
  }
  if (e < 0.0 || !std::isfinite(e)) {
    throw std::invalid_argument("logistic_event_time: bad budget");
  }
  if (v_dot_x == 0.0) return kInf;
  // The factor potential is increasing along the line iff the sign of
  // <v, x_i> opposes the label: label 1 decreases it when <v, x_i> > 0.
  if (label == 1 ? v_dot_x > 0.0 : v_dot_x < 0.0) return kInf;
  if (e == 0.0) return 0.0;
  const double m = label == 1 ? theta_dot_x : -theta_dot_x;
  const double lhs = log_add_exp(e, log_expm1(e) + m);
  return lhs / std::abs(v_dot_x);
}

EventDraw logistic_event_time(const Vec& x_i, int label, const Vec& theta,
                              const Vec& v, double e) {
  EventDraw draw;
  draw.time = logistic_event_time_dots(label, theta.dot(x_i), v.dot(x_i), e);
  draw.budget = e;
  return draw;
}

EventDraw superposition_first_arrival(std::span<const FactorSolver> factors,
                                      Rng& rng) {
  EventDraw best;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const double e = rng.exponential();
    const double t = factors[i](e);
    if (t < best.time) {
      best.time = t;
      best.factor = static_cast<int>(i);
      best.budget = e;
    }
  }
  return best;
}

namespace {

double simpson_panel(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm)) {
    throw std::invalid_argument("oracle_event_time: rate evaluated non-finite");
  }
  const double left = simpson_panel(fa, flm, fm, m - a);
  const double right = simpson_panel(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb)) {
    throw std::invalid_argument("oracle_event_time: rate evaluated non-finite");
  }
  const double whole = simpson_panel(fa, fm, fb, b - a);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

double oracle_event_time(const std::function<double(double)>& rate, double e,
                         double t_max) {
  if (e < 0.0 || !std::isfinite(e)) {
    throw std::invalid_argument("oracle_event_time: bad budget");
  }
  if (t_max <= 0.0) {
    throw std::invalid_argument("oracle_event_time: t_max must be positive");
  }
  if (e == 0.0) return 0.0;
  const double quad_tol = 1e-13;
  const auto cumulative = [&](double t) {
    return adaptive_simpson(rate, 0.0, t, quad_tol);
  };
  if (cumulative(t_max) < e) return kInf;
  double lo = 0.0, hi = t_max;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // hit floating-point resolution
    if (cumulative(mid) >= e) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace fec
