#include "fec/diagnostics.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace fec {

namespace {

// Raw lagged products s_k = sum_i h_i h_{i+k} for k = 0..max_lag.
std::vector<double> lagged_products_direct(std::span<const double> h, int max_lag) {
  const long n = static_cast<long>(h.size());
  std::vector<double> s(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (long i = 0; i + k < n; ++i) acc += h[i] * h[i + k];
    s[static_cast<std::size_t>(k)] = acc;
  }
  return s;
}

std::size_t fft_length(long n) {
  std::size_t len = 1;
  while (len < static_cast<std::size_t>(2 * n)) len <<= 1;
  return len;
}

std::vector<double> lagged_products_fft(std::span<const double> h, int max_lag) {
  const long n = static_cast<long>(h.size());
  const std::size_t len = fft_length(n);
  std::vector<std::complex<double>> buf(len), freq(len);
  for (long i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = h[i];
  Eigen::FFT<double> fft;
  fft.fwd(freq, buf);
  for (auto& f : freq) f = std::norm(f);
  fft.inv(buf, freq);
  std::vector<double> s(static_cast<std::size_t>(max_lag) + 1);
  for (int k = 0; k <= max_lag; ++k) s[static_cast<std::size_t>(k)] = buf[k].real();
  return s;
}

std::vector<double> lagged_products(std::span<const double> h, int max_lag) {
  const double work = static_cast<double>(h.size()) * (max_lag + 1);
  if (work <= 4e6) return lagged_products_direct(h, max_lag);
  return lagged_products_fft(h, max_lag);
}

void check_series(std::span<const double> series, int max_lag) {
  if (series.size() < 2) {
    throw std::invalid_argument("acf: series needs at least two samples");
  }
  if (max_lag < 0 || max_lag >= static_cast<long>(series.size())) {
    throw std::invalid_argument("acf: max_lag must lie in [0, n)");
  }
}

}  // namespace

AcfCurve acf(std::span<const double> series, int max_lag,
             std::optional<ObservableMoments> moments) {
  check_series(series, max_lag);
  const long n = static_cast<long>(series.size());
  double m, var;
  if (moments) {
    m = moments->mean;
    var = moments->variance;
  } else {
    m = 0.0;
    for (double v : series) m += v;
    m /= static_cast<double>(n);
    var = 0.0;
    for (double v : series) var += (v - m) * (v - m);
    var /= static_cast<double>(n);
  }
  if (!(var > 0.0)) {
    throw std::invalid_argument("acf: zero variance series");
  }
  const std::vector<double> s = lagged_products(series, max_lag);
  AcfCurve curve;
  curve.mean = m;
  curve.variance = var;
  curve.values.resize(static_cast<std::size_t>(max_lag) + 1);
  for (int k = 0; k <= max_lag; ++k) {
    const double pairs = static_cast<double>(n - k);
    curve.values[static_cast<std::size_t>(k)] =
        (s[static_cast<std::size_t>(k)] / pairs - m * m) / var;
  }
  return curve;
}

AcfCurve acf_columns_mean(const Mat& columns, int max_lag,
                          const std::vector<ObservableMoments>* per_column) {
  const long n = columns.rows();
  const int d = static_cast<int>(columns.cols());
  if (n < 2 || d < 1) {
    throw std::invalid_argument("acf_columns_mean: need n >= 2 and d >= 1");
  }
  if (max_lag < 0 || max_lag >= n) {
    throw std::invalid_argument("acf_columns_mean: max_lag must lie in [0, n)");
  }
  if (per_column && static_cast<int>(per_column->size()) != d) {
    throw std::invalid_argument("acf_columns_mean: moments size mismatch");
  }
  AcfCurve total;
  total.values.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
  std::vector<double> h(static_cast<std::size_t>(n));
  for (int c = 0; c < d; ++c) {
    double m, var;
    if (per_column) {
      m = (*per_column)[static_cast<std::size_t>(c)].mean;
      var = (*per_column)[static_cast<std::size_t>(c)].variance;
    } else {
      m = columns.col(c).mean();
      var = (columns.col(c).array() - m).square().mean();
    }
    if (!(var > 0.0)) {
      throw std::invalid_argument("acf_columns_mean: zero variance column");
    }
    for (long i = 0; i < n; ++i) {
      h[static_cast<std::size_t>(i)] = columns(i, c);
    }
    // Same normalization as acf() so this is exactly the mean of the
    // per-column curves.
    const std::vector<double> s = lagged_products(h, max_lag);
    for (int k = 0; k <= max_lag; ++k) {
      const double pairs = static_cast<double>(n - k);
      total.values[static_cast<std::size_t>(k)] +=
          (s[static_cast<std::size_t>(k)] / pairs - m * m) / var;
    }
  }
  for (auto& v : total.values) v /= d;
  total.mean = 0.0;
  total.variance = 1.0;
  return total;
}

IntegratedTime integrated_time(const AcfCurve& curve, long series_length) {
  const long klimit = static_cast<long>(curve.values.size()) - 1;
  if (klimit < 0 || series_length < 2) {
    throw std::invalid_argument("integrated_time: empty curve or short series");
  }
  constexpr double kThreshold = 1e-3;
  // First lag from which |C| stays below the threshold through the window.
  long n_int = klimit + 1;
  for (long k = klimit; k >= 1; --k) {
    if (std::abs(curve.values[static_cast<std::size_t>(k)]) > kThreshold) break;
    n_int = k;
  }
  IntegratedTime result;
  if (n_int > klimit) {
    result.truncated = true;
    n_int = klimit;
  } else {
    // Sum through the lag right before the quiet stretch begins.
    n_int = n_int - 1;
  }
  result.n_int = n_int;
  double tau = 0.5;
  for (long k = 1; k <= n_int; ++k) {
    tau += (1.0 - static_cast<double>(k) / static_cast<double>(series_length)) *
           curve.values[static_cast<std::size_t>(k)];
  }
  result.tau = tau;
  return result;
}

double ess_from_tau(long series_length, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("ess_from_tau: tau must be positive");
  return static_cast<double>(series_length) / (2.0 * tau);
}

ScalingFit fit_scaling(std::span<const ScalingPoint> points) {
  if (points.size() < 2) {
    throw std::invalid_argument("fit_scaling: need at least two points");
  }
  double W = 0.0, sx = 0.0, sy = 0.0;
  std::vector<double> xs, ys, ws;
  for (const auto& p : points) {
    if (!(p.dim > 0.0) || !(p.tau > 0.0)) {
      throw std::invalid_argument("fit_scaling: dims and taus must be positive");
    }
    const double x = std::log(p.dim);
    const double y = std::log(p.tau);
    const double sigma = p.err > 0.0 ? p.err / p.tau : 1.0;
    const double w = 1.0 / (sigma * sigma);
    xs.push_back(x);
    ys.push_back(y);
    ws.push_back(w);
    W += w;
    sx += w * x;
    sy += w * y;
  }
  const double xbar = sx / W, ybar = sy / W;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
    sxy += ws[i] * (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (!(sxx > 0.0)) {
    throw std::invalid_argument("fit_scaling: need at least two distinct dims");
  }
  ScalingFit fit;
  fit.exponent = sxy / sxx;
  const double intercept = ybar - fit.exponent * xbar;
  fit.amplitude = std::exp(intercept);
  fit.exponent_err = std::sqrt(1.0 / sxx);
  fit.amplitude_err = fit.amplitude * std::sqrt(1.0 / W + xbar * xbar / sxx);
  return fit;
}

std::vector<double> mixture_occupancy(const Mat& samples,
                                      std::span<const Vec> means) {
  if (means.empty()) throw std::invalid_argument("mixture_occupancy: no means");
  const long n = samples.rows();
  if (n == 0) throw std::invalid_argument("mixture_occupancy: no samples");
  std::vector<double> occ(means.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    int best = 0;
    double best_d = (samples.row(i).transpose() - means[0]).squaredNorm();
    for (std::size_t j = 1; j < means.size(); ++j) {
      const double dj = (samples.row(i).transpose() - means[j]).squaredNorm();
      if (dj < best_d) {
        best_d = dj;
        best = static_cast<int>(j);
      }
    }
    occ[static_cast<std::size_t>(best)] += 1.0;
  }
  for (auto& v : occ) v /= static_cast<double>(n);
  return occ;
}

std::vector<double> observable_series(const TargetModel& target,
                                      const Mat& positions, Observable obs,
                                      int coordinate) {
  const long n = positions.rows();
  std::vector<double> h(static_cast<std::size_t>(n));
  switch (obs) {
    case Observable::Potential:
      for (long i = 0; i < n; ++i) {
        h[static_cast<std::size_t>(i)] = target.potential(positions.row(i).transpose());
      }
      return h;
    case Observable::SquaredNorm:
      for (long i = 0; i < n; ++i) {
        h[static_cast<std::size_t>(i)] = positions.row(i).squaredNorm();
      }
      return h;
    case Observable::Coordinate:
      if (coordinate < 0 || coordinate >= positions.cols()) {
        throw std::invalid_argument("observable_series: coordinate out of range");
      }
      for (long i = 0; i < n; ++i) {
        h[static_cast<std::size_t>(i)] = positions(i, coordinate);
      }
      return h;
    case Observable::NegLogLik: {
      const auto* logistic = dynamic_cast<const LogisticPosterior*>(&target);
      if (!logistic) {
        throw std::invalid_argument(
            "observable_series: NegLogLik needs a logistic posterior target");
      }
      // Blocked so the n x N inner-product matrix never materializes whole.
      const Mat& cov = logistic->data().covariates;
      const auto& labels = logistic->data().labels;
      const long rows = cov.rows();
      const long block = 512;
      for (long start = 0; start < n; start += block) {
        const long count = std::min(block, n - start);
        const Mat z = positions.middleRows(start, count) * cov.transpose();
        for (long i = 0; i < count; ++i) {
          double nll = 0.0;
          for (long r = 0; r < rows; ++r) {
            const double zi = z(i, r);
            const double sp = zi > 0.0 ? zi + std::log1p(std::exp(-zi))
                                       : std::log1p(std::exp(zi));
            nll += sp - labels[static_cast<std::size_t>(r)] * zi;
          }
          h[static_cast<std::size_t>(start + i)] = nll / static_cast<double>(rows);
        }
      }
      return h;
    }
  }
  throw std::logic_error("unreachable observable");
}

}  // namespace fec
