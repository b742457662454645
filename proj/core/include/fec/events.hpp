#pragma once

#include <functional>
#include <limits>
#include <span>

#include "fec/rng.hpp"
#include "fec/types.hpp"

namespace fec {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One event-time draw. time is +inf when the rate never accumulates enough
// mass. factor is the index of the factor that fired (-1 when the target is
// not factorized). budget is the Exp(1) variate the solver consumed; NaN for
// thinning, which uses several variates.
struct EventDraw {
  double time = kInf;
  int factor = -1;
  double budget = std::numeric_limits<double>::quiet_NaN();
};

// Event rate along a line through a quadratic potential:
// rate(t) = max(0, 2 u0 (t + t0)) with u0 > 0.
struct QuadraticLineRate {
  double u0 = 0.0;
  double t0 = 0.0;
};

// First time T with integral_0^T max(0, a + b t) dt = e, any signs of a, b;
// +inf when the total mass is below e. e = 0 gives T = 0.
double linear_rate_event_time(double a, double b, double e);

// Exact solve for the quadratic line rate; throws std::invalid_argument if
// u0 <= 0.
EventDraw quadratic_event_time(const QuadraticLineRate& line, double e);

// Exact event time for one logistic-regression data factor with label in
// {0, 1}: the factor potential along theta + t v either never increases
// (+inf) or crosses e at a closed-form T.
EventDraw logistic_event_time(const Vec& x_i, int label, const Vec& theta,
                              const Vec& v, double e);
// Same, with the two inner products precomputed.
double logistic_event_time_dots(int label, double theta_dot_x, double v_dot_x,
                                double e);

// First arrival over a set of factor solvers. Each solver maps the consumed
// Exp(1) budget to an elapsed time; one budget is drawn per factor in index
// order so the stream consumption is deterministic.
using FactorSolver = std::function<double(double e)>;
EventDraw superposition_first_arrival(std::span<const FactorSolver> factors, Rng& rng);

// Numerical inversion of an arbitrary finite rate function by adaptive
// Simpson quadrature plus bisection on [0, t_max]; absolute tolerance 1e-10
// on the returned time. +inf when the integral over [0, t_max] is below e.
// Throws std::invalid_argument if the rate evaluates non-finite.
double oracle_event_time(const std::function<double(double)>& rate, double e,
                         double t_max);

// Adaptive Simpson integral of f over [a, b], absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol);

}  // namespace fec
