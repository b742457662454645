#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fec/model.hpp"
#include "fec/types.hpp"

namespace fec {

// Normalized autocorrelation curve; values[k] is the lag-k coefficient,
// values[0] == 1 under empirical normalization.
struct AcfCurve {
  std::vector<double> values;
  double mean = 0.0;      // normalization actually used
  double variance = 1.0;
};

// Lag-k coefficients 0..max_lag: (mean of h_i h_{i+k} over the n-k available
// pairs minus m^2) / sigma^2. moments supplies the true m, sigma^2; otherwise
// the series' empirical moments are used. Computed via FFT above a size
// cutoff, which matches the direct sum to rounding error.
AcfCurve acf(std::span<const double> series, int max_lag,
             std::optional<ObservableMoments> moments = std::nullopt);

// Mean of the per-column autocorrelation curves, each normalized exactly as
// in acf (with per_column moments when given). columns is n x d, one row per
// sample.
AcfCurve acf_columns_mean(const Mat& columns, int max_lag,
                          const std::vector<ObservableMoments>* per_column = nullptr);

struct IntegratedTime {
  double tau = 0.5;
  long n_int = 0;       // cutoff lag actually used
  bool truncated = false;  // |C| never stayed below the threshold in-window
};

// tau = 1/2 + sum_{k=1}^{N_int} (1 - k/n) C(k) with N_int the first lag from
// which |C| stays <= 1e-3 through the end of the curve; falls back to the
// full window when that never happens.
IntegratedTime integrated_time(const AcfCurve& curve, long series_length);

double ess_from_tau(long series_length, double tau);

struct ScalingPoint {
  double dim = 0.0;
  double tau = 0.0;
  double err = 0.0;  // standard error of tau; <= 0 means unweighted
};

// Weighted least squares of log tau against log dim: tau = amplitude *
// dim^exponent. Needs at least two distinct dimensions.
struct ScalingFit {
  double amplitude = 0.0;
  double exponent = 0.0;
  double amplitude_err = 0.0;
  double exponent_err = 0.0;
};

ScalingFit fit_scaling(std::span<const ScalingPoint> points);

// Fraction of samples whose nearest mixture mean (Euclidean) is each
// component; sums to one.
std::vector<double> mixture_occupancy(const Mat& samples,
                                      std::span<const Vec> means);

// Scalar observable read off each sample row. Coordinate uses the given
// index. NegLogLik requires a LogisticPosterior target.
std::vector<double> observable_series(const TargetModel& target,
                                      const Mat& positions, Observable obs,
                                      int coordinate = 0);

}  // namespace fec
