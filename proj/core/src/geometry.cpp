#include "fec/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace fec {

GradientFrame make_frame(const Vec& grad) {
  if (!grad.allFinite()) {
    throw std::invalid_argument("make_frame: gradient has non-finite entries");
  }
  GradientFrame frame;
  const double norm = grad.norm();
  if (norm < 1e-300) {
    frame.normal = Vec::Zero(grad.size());
    frame.degenerate = true;
  } else {
    frame.normal = grad / norm;
  }
  return frame;
}

Vec sample_direction(const DirectionLaw& law, Rng& rng) {
  Vec y(law.dim);
  for (int i = 0; i < law.dim; ++i) y[i] = rng.normal();
  if (law.mode == DirectionMode::UnitSphere) {
    double norm = y.norm();
    while (norm < 1e-12) {
      for (int i = 0; i < law.dim; ++i) y[i] = rng.normal();
      norm = y.norm();
    }
    y /= norm;
  }
  return y;
}

double rho_quantile_sphere(int dim, double v) {
  // CDF of u = -<y, n> on [0, 1] is 1 - (1 - u^2)^{(d-1)/2}; inverting at
  // 1 - v gives u = sqrt(1 - v^{2/(d-1)}).
  const double u = std::sqrt(std::max(0.0, 1.0 - std::pow(v, 2.0 / (dim - 1))));
  return -u;
}

double rho_from_exponential(double e) { return -std::sqrt(2.0 * e); }

double sample_rho(const DirectionLaw& law, Rng& rng) {
  if (law.mode == DirectionMode::UnitSphere) {
    if (law.dim < 2) {
      throw std::invalid_argument("sample_rho: sphere law needs dim >= 2");
    }
    return rho_quantile_sphere(law.dim, rng.uniform());
  }
  return rho_from_exponential(rng.exponential());
}

std::pair<Vec, Vec> orthonormal_pair(const GradientFrame& frame, Rng& rng) {
  if (frame.degenerate) {
    throw std::invalid_argument("orthonormal_pair: degenerate frame");
  }
  const int d = frame.dim();
  if (d < 3) {
    throw std::invalid_argument("orthonormal_pair: needs dim >= 3");
  }
  Vec e1(d), e2(d);
  for (;;) {
    Vec g(d);
    for (int i = 0; i < d; ++i) g[i] = rng.normal();
    Vec p = frame.orthogonal(g);
    const double n = p.norm();
    if (n < 1e-8) continue;
    e1 = p / n;
    break;
  }
  for (;;) {
    Vec g(d);
    for (int i = 0; i < d; ++i) g[i] = rng.normal();
    Vec p = frame.orthogonal(g);
    p -= e1.dot(p) * e1;
    const double n = p.norm();
    if (n < 1e-8) continue;
    e2 = p / n;
    break;
  }
  return {std::move(e1), std::move(e2)};
}

std::vector<Vec> orthonormal_basis_householder(const GradientFrame& frame) {
  if (frame.degenerate) {
    throw std::invalid_argument("orthonormal_basis_householder: degenerate frame");
  }
  const int d = frame.dim();
  const Vec& n = frame.normal;
  // Pick the canonical axis least aligned with n, so v = n - e_i is well
  // conditioned; H = Id - 2 v v^T / |v|^2 maps e_i to n and the remaining
  // canonical vectors to a basis of the complement.
  int axis = 0;
  double best = std::abs(n[0]);
  for (int i = 1; i < d; ++i) {
    if (std::abs(n[i]) < best) {
      best = std::abs(n[i]);
      axis = i;
    }
  }
  Vec v = n;
  v[axis] -= 1.0;
  const double vv = v.squaredNorm();
  std::vector<Vec> basis;
  basis.reserve(d - 1);
  for (int j = 0; j < d; ++j) {
    if (j == axis) continue;
    Vec e = -(2.0 * v[j] / vv) * v;
    e[j] += 1.0;
    basis.push_back(std::move(e));
  }
  return basis;
}

Vec random_orthogonal_unit(const GradientFrame& frame, Rng& rng) {
  if (frame.degenerate || frame.dim() < 2) {
    throw std::invalid_argument("random_orthogonal_unit: needs dim >= 2 and a normal");
  }
  const int d = frame.dim();
  for (;;) {
    Vec g(d);
    for (int i = 0; i < d; ++i) g[i] = rng.normal();
    Vec p = frame.orthogonal(g);
    const double n = p.norm();
    if (n < 1e-8) continue;
    return p / n;
  }
}

}  // namespace fec
