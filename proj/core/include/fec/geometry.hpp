#pragma once

#include <utility>
#include <vector>

#include "fec/rng.hpp"
#include "fec/types.hpp"

namespace fec {

// Law of the velocity/direction variable: uniform on the unit sphere, or
// standard Gaussian on R^d.
enum class DirectionMode { UnitSphere, Gaussian };

struct DirectionLaw {
  DirectionMode mode = DirectionMode::UnitSphere;
  int dim = 0;
};

// Unit normal along a gradient plus the split of any vector into its
// component along the normal and the orthogonal remainder. A frame built
// from a (near-)zero gradient is degenerate and has no usable normal.
struct GradientFrame {
  Vec normal;
  bool degenerate = false;

  int dim() const { return static_cast<int>(normal.size()); }
  double parallel(const Vec& y) const { return normal.dot(y); }
  Vec orthogonal(const Vec& y) const { return y - normal.dot(y) * normal; }
};

// Throws std::invalid_argument on non-finite input. Gradients with norm
// below 1e-300 give a degenerate frame.
GradientFrame make_frame(const Vec& grad);

Vec sample_direction(const DirectionLaw& law, Rng& rng);

// Parallel coordinate of a direction that just triggered an event, i.e. the
// law of <y, n> conditioned on a reflection: density proportional to
// (-v)(1 - v^2)^{(d-3)/2} on [-1, 0] for the sphere, -sqrt(2 E) with
// E ~ Exp(1) for the Gaussian law. Always <= 0.
double sample_rho(const DirectionLaw& law, Rng& rng);

// Quantile helpers behind sample_rho, exposed for testing. v in [0, 1] is
// the uniform variate, e >= 0 the exponential one.
double rho_quantile_sphere(int dim, double v);
double rho_from_exponential(double e);

// Two orthonormal vectors spanning a uniformly random 2-plane inside the
// orthogonal complement of frame.normal. Requires dim >= 3 and a
// non-degenerate frame. Gram-Schmidt with redraw when a projection falls
// below 1e-8 in norm.
std::pair<Vec, Vec> orthonormal_pair(const GradientFrame& frame, Rng& rng);

// Deterministic orthonormal basis of the orthogonal complement of
// frame.normal via one Householder reflection. Returns dim-1 vectors.
std::vector<Vec> orthonormal_basis_householder(const GradientFrame& frame);

// Uniform unit vector inside the orthogonal complement of frame.normal.
Vec random_orthogonal_unit(const GradientFrame& frame, Rng& rng);

}  // namespace fec
