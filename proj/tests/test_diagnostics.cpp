#include <doctest.h>

#include <cmath>

#include "fec/diagnostics.hpp"
#include "fec/rng.hpp"
#include "support/testutil.hpp"

using namespace fec;

namespace {

// Direct translation of the autocorrelation definition: averaged lagged
// products of the (optionally) centered series over the n - k pairs.
std::vector<double> brute_acf(const std::vector<double>& h, int max_lag,
                              std::optional<ObservableMoments> moments) {
  double m, var;
  if (moments) {
    m = moments->mean;
    var = moments->variance;
  } else {
    m = 0.0;
    for (double x : h) m += x;
    m /= static_cast<double>(h.size());
    var = 0.0;
    for (double x : h) var += (x - m) * (x - m);
    var /= static_cast<double>(h.size());
  }
  std::vector<double> c(max_lag + 1, 0.0);
  const long n = static_cast<long>(h.size());
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (long i = 0; i + k < n; ++i) s += h[i] * h[i + k];
    c[k] = (s / static_cast<double>(n - k) - m * m) / var;
  }
  return c;
}

std::vector<double> ar1_series(int n, double phi, Rng& rng) {
  std::vector<double> h(n);
  double x = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (int i = 0; i < n; ++i) {
    x = phi * x + rng.normal();
    h[i] = x;
  }
  return h;
}

}  // namespace

TEST_CASE("acf equals the brute-force sum, empirical and true moments") {
  Rng rng(81);
  const auto h = ar1_series(700, 0.6, rng);
  const int K = 120;
  const AcfCurve emp = acf(h, K);
  const auto brute_emp = brute_acf(h, K, std::nullopt);
  for (int k = 0; k <= K; ++k) {
    CHECK(std::abs(emp.values[k] - brute_emp[k]) < 1e-12);
  }
  CHECK(emp.values[0] == doctest::Approx(1.0).epsilon(1e-12));

  const ObservableMoments mom{0.0, 1.0 / (1.0 - 0.36)};
  const AcfCurve tru = acf(h, K, mom);
  const auto brute_tru = brute_acf(h, K, mom);
  for (int k = 0; k <= K; ++k) {
    CHECK(std::abs(tru.values[k] - brute_tru[k]) < 1e-12);
  }
}

TEST_CASE("fft path matches the direct path") {
  // n (K + 1) just above the cutoff forces the fft branch; recompute the
  // same curve by brute force.
  Rng rng(82);
  const int n = 6000, K = 800;  // 6000 * 801 = 4.8e6 > 4e6
  const auto h = ar1_series(n, 0.8, rng);
  const AcfCurve fft = acf(h, K);
  const auto brute = brute_acf(h, K, std::nullopt);
  for (int k = 0; k <= K; ++k) {
    CHECK(std::abs(fft.values[k] - brute[k]) < 1e-10);
  }
}

TEST_CASE("acf of columns averages the standardized per-column curves") {
  Rng rng(83);
  const int n = 400, d = 3, K = 50;
  Mat columns(n, d);
  for (int j = 0; j < d; ++j) {
    const auto h = ar1_series(n, 0.3 + 0.2 * j, rng);
    for (int i = 0; i < n; ++i) columns(i, j) = (1.0 + j) * h[i];
  }
  const AcfCurve mean_curve = acf_columns_mean(columns, K);
  for (int k = 0; k <= K; ++k) {
    double expect = 0.0;
    for (int j = 0; j < d; ++j) {
      std::vector<double> col(columns.col(j).data(), columns.col(j).data() + n);
      expect += acf(col, K).values[k];
    }
    expect /= d;
    CHECK(std::abs(mean_curve.values[k] - expect) < 1e-12);
  }
}

TEST_CASE("integrated time truncates at the quiet tail") {
  AcfCurve curve;
  curve.values = {1.0, 0.5, 0.25, 0.125, 1e-4, -5e-4, 2e-4, 1e-5, 0.0};
  const long n = 1000;
  const IntegratedTime it = integrated_time(curve, n);
  CHECK(!it.truncated);
  CHECK(it.n_int == 3);
  double expect = 0.5;
  for (int k = 1; k <= 3; ++k) {
    expect += (1.0 - static_cast<double>(k) / n) * curve.values[k];
  }
  CHECK(it.tau == doctest::Approx(expect).epsilon(1e-15));

  AcfCurve loud;
  loud.values = {1.0, 0.9, 0.8, 0.7};
  const IntegratedTime lt = integrated_time(loud, n);
  CHECK(lt.truncated);
  CHECK(lt.n_int == 3);  // whole window used
}

TEST_CASE("ess follows from tau") {
  CHECK(ess_from_tau(1000, 0.5) == doctest::Approx(1000.0));
  CHECK(ess_from_tau(1000, 5.0) == doctest::Approx(100.0));
}

TEST_CASE("scaling fit recovers a planted power law") {
  // Exact data: machine-precision recovery.
  std::vector<ScalingPoint> points;
  for (double d : {25.0, 100.0, 400.0}) {
    points.push_back({d, 2.0 * std::pow(d, 1.5), 0.0});
  }
  const ScalingFit exact = fit_scaling(points);
  CHECK(exact.exponent == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(exact.amplitude == doctest::Approx(2.0).epsilon(1e-12));

  // Noisy data: recovery within the reported uncertainty.
  Rng rng(84);
  points.clear();
  for (double d : {16.0, 32.0, 64.0, 128.0, 256.0, 512.0}) {
    const double tau = 0.7 * std::pow(d, 0.9) * std::exp(0.05 * rng.normal());
    points.push_back({d, tau, 0.05 * tau});
  }
  const ScalingFit fit = fit_scaling(points);
  CHECK(std::abs(fit.exponent - 0.9) < 4.0 * fit.exponent_err);
  CHECK(fit.exponent_err > 0.0);
  CHECK(fit.exponent_err < 0.1);

  const std::vector<ScalingPoint> single{{4.0, 1.0, 0.0}};
  CHECK_THROWS_AS(fit_scaling(single), std::invalid_argument);
}

TEST_CASE("nearest-mean occupancy") {
  Mat samples(5, 1);
  samples << -3.0, -2.5, 0.1, 2.9, 3.2;
  std::vector<Vec> means(2, Vec(1));
  means[0] << -3.0;
  means[1] << 3.0;
  // 0.1 sits nearer +3 than -3, so the split is 2 / 3.
  const auto occ = mixture_occupancy(samples, means);
  REQUIRE(occ.size() == 2);
  CHECK(occ[0] == doctest::Approx(0.4));
  CHECK(occ[1] == doctest::Approx(0.6));
}

TEST_CASE("observable series read off sample rows") {
  DiagonalGaussian g(standard_gaussian(2));
  Mat rows(3, 2);
  rows << 1.0, 2.0, 0.0, 0.0, -1.0, 1.0;
  const auto pot = observable_series(g, rows, Observable::Potential);
  CHECK(pot[0] == doctest::Approx(2.5));
  CHECK(pot[1] == doctest::Approx(0.0));
  const auto sq = observable_series(g, rows, Observable::SquaredNorm);
  CHECK(sq[0] == doctest::Approx(5.0));
  const auto c1 = observable_series(g, rows, Observable::Coordinate, 1);
  CHECK(c1[0] == doctest::Approx(2.0));
  CHECK_THROWS_AS(observable_series(g, rows, Observable::NegLogLik),
                  std::exception);
}
