#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fec/events.hpp"
#include "fec/rng.hpp"
#include "fec/types.hpp"

namespace fec {

// How a target can produce event times for the samplers.
enum class EventCapability { ExactQuadratic, ExactFactorized, Thinning };

enum class Observable { Potential, SquaredNorm, Coordinate, NegLogLik };

struct ObservableMoments {
  double mean = 0.0;
  double variance = 1.0;
};

class TargetModel {
public:
  virtual ~TargetModel() = default;

  virtual int dim() const = 0;
  virtual double potential(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual EventCapability capability() const = 0;

  // Closed-form moments of an observable under the target, when available.
  // coordinate applies to Observable::Coordinate only.
  virtual std::optional<ObservableMoments> moments(Observable obs,
                                                   int coordinate = 0) const {
    (void)obs;
    (void)coordinate;
    return std::nullopt;
  }

  // Factorized access; factor_count() == 0 means the target is monolithic.
  virtual int factor_count() const { return 0; }
  virtual double factor_potential(int factor, const Vec& x) const;
  virtual Vec factor_gradient(int factor, const Vec& x) const;
  // Elapsed time until the factor potential along x + t y grows by budget e.
  virtual double factor_event_time(int factor, const Vec& x, const Vec& y,
                                   double e) const;
};

// Gaussian with diagonal covariance. Covers both the standard Gaussian and
// the ill-conditioned benchmark target whose variances grow geometrically
// from 1 to 10^6 across coordinates.
class DiagonalGaussian : public TargetModel {
public:
  explicit DiagonalGaussian(Vec variances);

  int dim() const override { return static_cast<int>(inv_var_.size()); }
  double potential(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  EventCapability capability() const override {
    return EventCapability::ExactQuadratic;
  }
  std::optional<ObservableMoments> moments(Observable obs,
                                           int coordinate) const override;

  // Coefficients of the event rate along x + t y.
  QuadraticLineRate line_rate(const Vec& x, const Vec& y) const;

  const Vec& variances() const { return var_; }
  const Vec& inverse_variances() const { return inv_var_; }

private:
  Vec var_;
  Vec inv_var_;
};

DiagonalGaussian standard_gaussian(int dim);
// Variance_i = 10^{6 (i-1) / (d-1)}, so variance_1 = 1 and variance_d = 1e6.
DiagonalGaussian build_anisotropic_gaussian(int dim);

// Equal-weight mixture of five Gaussians with permuted shared variances and
// means marching away from the origin. Fully determined by (dim, seed).
struct GaussianMixtureSpec {
  int dim = 0;
  std::uint64_t seed = 0;
  Vec base_variances;                      // sigma_i^2 ~ U[0.5, 3]
  std::array<std::vector<int>, 5> perms;   // kappa_j
  std::array<Vec, 5> means;                // mu_1 = 0
  double nu1 = 0.0, nu2 = 0.0;             // spacing draws in [1, 2]
};

GaussianMixtureSpec build_gaussian_mixture(int dim, std::uint64_t seed);

class GaussianMixture : public TargetModel {
public:
  explicit GaussianMixture(GaussianMixtureSpec spec);

  int dim() const override { return spec_.dim; }
  double potential(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  EventCapability capability() const override { return EventCapability::Thinning; }

  // Posterior component probabilities at x (softmax of component
  // log-densities); positive, sum to one.
  Vec component_weights(const Vec& x) const;
  // Exact draw from the mixture, used as a ground-truth sampler.
  Vec sample_exact(Rng& rng) const;

  const GaussianMixtureSpec& spec() const { return spec_; }
  const Vec& component_inverse_variances(int j) const { return inv_var_[j]; }

  // Thinned event time from x along y, with a per-component linear envelope.
  // Stops early and returns +inf once elapsed time exceeds cap.
  EventDraw thinned_event_time(const Vec& x, const Vec& y, Rng& rng,
                               double cap = kInf) const;

private:
  Vec log_component_densities(const Vec& x) const;

  GaussianMixtureSpec spec_;
  std::array<Vec, 5> inv_var_;
  double log_norm_ = 0.0;  // shared -log((2 pi)^{d/2} prod sigma) offset
};

// Binary logistic regression data plus N(0, zeta^2 Id) prior on the
// coefficients. Factor 0 is the prior, factors 1..N the data terms.
struct LogisticDataset {
  Mat covariates;               // N x d, intercept column included if requested
  std::vector<int> labels;      // 0/1
  std::vector<std::string> column_names;
};

// Loads a delimited numeric table: comma or whitespace separated, '#'
// comments, one label column holding exactly two distinct numeric values
// (the smaller maps to 0). label_column is 0-based; negative counts from
// the end (-1 = last). Errors mention the 1-based row. standardize
// centers/scales each covariate column by its mean and population standard
// deviation; add_intercept appends a constant 1 column after
// standardization.
LogisticDataset load_uci_csv(const std::string& path, int label_column,
                             bool standardize, bool add_intercept);

class LogisticPosterior : public TargetModel {
public:
  LogisticPosterior(LogisticDataset data, double prior_variance);

  int dim() const override { return static_cast<int>(data_.covariates.cols()); }
  double potential(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  EventCapability capability() const override {
    return EventCapability::ExactFactorized;
  }

  int factor_count() const override {
    return static_cast<int>(data_.labels.size()) + 1;
  }
  double factor_potential(int factor, const Vec& x) const override;
  Vec factor_gradient(int factor, const Vec& x) const override;
  double factor_event_time(int factor, const Vec& x, const Vec& y,
                           double e) const override;

  // Mean negative log-likelihood over the dataset (no prior term).
  double mean_nll(const Vec& theta) const;

  const LogisticDataset& data() const { return data_; }
  double prior_variance() const { return prior_variance_; }

private:
  LogisticDataset data_;
  double prior_variance_;
};

}  // namespace fec
