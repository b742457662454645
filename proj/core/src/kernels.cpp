#include "fec/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/QR>

#include "fec/events.hpp"

namespace fec {

namespace {

bool is_mh(ParallelVariant v) {
  return v == ParallelVariant::IndependentMH || v == ParallelVariant::RandomWalkMH;
}

// Log density of the magnitude u = -<y, n> of the reflected parallel
// coordinate on [0, 1]: u (1 - u^2)^{(d-3)/2} up to normalization.
double log_magnitude_density(int dim, double u) {
  if (u < 0.0 || u > 1.0) return -kInf;
  return std::log(u) + 0.5 * (dim - 3) * std::log1p(-u * u);
}

double mh_magnitude_step(const ParallelKernel& kernel, ParallelVariant variant,
                         int dim, double u, Rng& rng) {
  double proposal;
  if (variant == ParallelVariant::IndependentMH) {
    proposal = rng.uniform();
  } else {
    proposal = u + rng.uniform(-kernel.rw_half_width, kernel.rw_half_width);
    proposal -= std::floor(proposal);  // wrap around [0, 1)
  }
  const double log_alpha =
      log_magnitude_density(dim, proposal) - log_magnitude_density(dim, u);
  const double log_unif = std::log(rng.uniform());
  if (std::isnan(log_alpha) || log_unif < log_alpha) return proposal;
  return u;
}

double apply_parallel_variant(const ParallelKernel& kernel,
                              ParallelVariant variant, const DirectionLaw& law,
                              double y_par, Rng& rng) {
  switch (variant) {
    case ParallelVariant::Identity:
      return -y_par;
    case ParallelVariant::Direct:
      return sample_rho(law, rng);
    case ParallelVariant::IndependentMH:
    case ParallelVariant::RandomWalkMH: {
      const double u = std::min(std::abs(y_par), 1.0);
      return -mh_magnitude_step(kernel, variant, law.dim, u, rng);
    }
    case ParallelVariant::Mixture:
      if (rng.bernoulli(kernel.mix_identity_weight)) return -y_par;
      return apply_parallel_variant(kernel, kernel.mix_inner, law, y_par, rng);
  }
  throw std::logic_error("unreachable parallel variant");
}

Vec fresh_orthogonal(const DirectionLaw& law, const GradientFrame& frame,
                     double target_norm, Rng& rng) {
  if (law.mode == DirectionMode::UnitSphere) {
    return target_norm * random_orthogonal_unit(frame, rng);
  }
  Vec g(frame.dim());
  for (int i = 0; i < frame.dim(); ++i) g[i] = rng.normal();
  return frame.orthogonal(g);
}

Vec apply_orthogonal_variant(const OrthogonalKernel& kernel,
                             OrthogonalVariant variant, const DirectionLaw& law,
                             const GradientFrame& frame, const Vec& y_perp,
                             Rng& rng) {
  const int d = frame.dim();
  switch (variant) {
    case OrthogonalVariant::Identity:
      return y_perp;
    case OrthogonalVariant::Full:
      return fresh_orthogonal(law, frame, y_perp.norm(), rng);
    case OrthogonalVariant::Switch: {
      if (d < 3) return y_perp;
      auto [e1, e2] = orthonormal_pair(frame, rng);
      const double c1 = e1.dot(y_perp), c2 = e2.dot(y_perp);
      return y_perp + (c2 - c1) * (e1 - e2);
    }
    case OrthogonalVariant::PerpSwitch: {
      if (d < 3) return y_perp;
      auto [e1, e2] = orthonormal_pair(frame, rng);
      const double c1 = e1.dot(y_perp), c2 = e2.dot(y_perp);
      return y_perp + (-c2 - c1) * e1 + (c1 - c2) * e2;
    }
    case OrthogonalVariant::RanP: {
      const int p = kernel.ranp_order;
      if (p == 2) {
        auto [e1, e2] = orthonormal_pair(frame, rng);
        const double theta =
            kernel.ranp_angle ? *kernel.ranp_angle
                              : rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double c1 = e1.dot(y_perp), c2 = e2.dot(y_perp);
        const double n1 = c1 * std::cos(theta) + c2 * std::sin(theta);
        const double n2 = c1 * std::sin(theta) - c2 * std::cos(theta);
        return y_perp + (n1 - c1) * e1 + (n2 - c2) * e2;
      }
      // General p: Haar rotation of a random orthonormal p-frame in the
      // complement.
      Mat frame_vectors(d, p);
      // Gram-Schmidt with redraws, like orthonormal_pair but p vectors.
      for (int k = 0; k < p; ++k) {
        for (;;) {
          Vec g(d);
          for (int i = 0; i < d; ++i) g[i] = rng.normal();
          Vec v = frame.orthogonal(g);
          for (int m = 0; m < k; ++m) {
            v -= frame_vectors.col(m).dot(v) * frame_vectors.col(m);
          }
          const double norm = v.norm();
          if (norm < 1e-8) continue;
          frame_vectors.col(k) = v / norm;
          break;
        }
      }
      Mat gauss(p, p);
      for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) gauss(i, j) = rng.normal();
      }
      Eigen::HouseholderQR<Mat> qr(gauss);
      Mat q = qr.householderQ();
      const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (int j = 0; j < p; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
      }
      if (q.determinant() < 0.0) q.col(p - 1) = -q.col(p - 1);
      const Vec coords = frame_vectors.transpose() * y_perp;
      const Vec rotated = q * coords;
      return y_perp + frame_vectors * (rotated - coords);
    }
    case OrthogonalVariant::AutoRegressive: {
      Vec g(d);
      for (int i = 0; i < d; ++i) g[i] = rng.normal();
      const double a = kernel.ar_coefficient;
      return a * y_perp + std::sqrt(1.0 - a * a) * frame.orthogonal(g);
    }
    case OrthogonalVariant::Mixture:
      if (rng.bernoulli(kernel.mix_identity_weight)) return y_perp;
      return apply_orthogonal_variant(kernel, kernel.mix_inner, law, frame,
                                      y_perp, rng);
  }
  throw std::logic_error("unreachable orthogonal variant");
}

void validate_variant_compat(const KernelSpec& spec, ParallelVariant v) {
  if (is_mh(v) && spec.law.mode != DirectionMode::UnitSphere) {
    throw std::invalid_argument("MH parallel kernels require the sphere law");
  }
  if (v == ParallelVariant::Mixture) {
    throw std::invalid_argument("parallel mixture kernels cannot nest");
  }
}

void validate_variant_compat(const KernelSpec& spec, OrthogonalVariant v) {
  if (v == OrthogonalVariant::AutoRegressive &&
      spec.law.mode != DirectionMode::Gaussian) {
    throw std::invalid_argument(
        "auto-regressive orthogonal kernel requires the Gaussian law");
  }
  if (v == OrthogonalVariant::RanP) {
    const int p = spec.orthogonal.ranp_order;
    if (p < 2 || p > spec.law.dim - 1) {
      throw std::invalid_argument("ranp order must satisfy 2 <= p <= dim - 1");
    }
  }
  if (v == OrthogonalVariant::Mixture) {
    throw std::invalid_argument("orthogonal mixture kernels cannot nest");
  }
}

}  // namespace

void validate_kernels(const KernelSpec& spec) {
  if (spec.law.dim < 2) {
    throw std::invalid_argument("kernel spec needs dim >= 2");
  }
  const auto& par = spec.parallel;
  if (is_mh(par.variant) && spec.law.mode != DirectionMode::UnitSphere) {
    throw std::invalid_argument("MH parallel kernels require the sphere law");
  }
  if (par.variant == ParallelVariant::RandomWalkMH ||
      par.mix_inner == ParallelVariant::RandomWalkMH) {
    if (!(par.rw_half_width > 0.0)) {
      throw std::invalid_argument("random-walk half-width must be positive");
    }
  }
  if (par.variant == ParallelVariant::Mixture) {
    if (par.mix_identity_weight < 0.0 || par.mix_identity_weight > 1.0) {
      throw std::invalid_argument("mixture weight must lie in [0, 1]");
    }
    validate_variant_compat(spec, par.mix_inner);
  }
  const auto& orth = spec.orthogonal;
  if (orth.variant == OrthogonalVariant::AutoRegressive ||
      (orth.variant == OrthogonalVariant::Mixture &&
       orth.mix_inner == OrthogonalVariant::AutoRegressive)) {
    if (std::abs(orth.ar_coefficient) > 1.0) {
      throw std::invalid_argument("auto-regressive coefficient must lie in [-1, 1]");
    }
  }
  if (orth.variant == OrthogonalVariant::Mixture) {
    if (orth.mix_identity_weight < 0.0 || orth.mix_identity_weight > 1.0) {
      throw std::invalid_argument("mixture weight must lie in [0, 1]");
    }
    validate_variant_compat(spec, orth.mix_inner);
  } else {
    validate_variant_compat(spec, orth.variant);
  }
  if (orth.variant == OrthogonalVariant::AutoRegressive &&
      spec.law.mode != DirectionMode::Gaussian) {
    throw std::invalid_argument(
        "auto-regressive orthogonal kernel requires the Gaussian law");
  }
}

double apply_parallel(const ParallelKernel& kernel, const DirectionLaw& law,
                      double y_par, Rng& rng) {
  return apply_parallel_variant(kernel, kernel.variant, law, y_par, rng);
}

Vec apply_orthogonal(const OrthogonalKernel& kernel, const DirectionLaw& law,
                     const GradientFrame& frame, const Vec& y_perp, Rng& rng) {
  Vec out = apply_orthogonal_variant(kernel, kernel.variant, law, frame, y_perp, rng);
  if (kernel.polarity == Polarity::Positive && y_perp.dot(out) < 0.0) {
    out = -out;
  }
  return out;
}

Vec assemble_direction(const KernelSpec& spec, const GradientFrame& frame,
                       const Vec& y, Rng& rng) {
  if (frame.degenerate) {
    return sample_direction(spec.law, rng);
  }
  const double y_par = frame.parallel(y);
  const Vec y_perp = frame.orthogonal(y);
  const double new_par = apply_parallel(spec.parallel, spec.law, y_par, rng);
  Vec new_perp = apply_orthogonal(spec.orthogonal, spec.law, frame, y_perp, rng);
  if (spec.law.mode == DirectionMode::UnitSphere) {
    const double radius = std::sqrt(std::max(0.0, 1.0 - new_par * new_par));
    const double norm = new_perp.norm();
    if (norm < 1e-14) {
      if (radius < 1e-14) {
        new_perp.setZero();
      } else {
        new_perp = radius * random_orthogonal_unit(frame, rng);
      }
    } else {
      new_perp *= radius / norm;
    }
  }
  return new_par * frame.normal + new_perp;
}

}  // namespace fec
