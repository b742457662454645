#pragma once

#include <optional>

#include "fec/geometry.hpp"
#include "fec/rng.hpp"
#include "fec/types.hpp"

namespace fec {

// Update of the parallel coordinate <y, n> at an event.
enum class ParallelVariant {
  Identity,       // pure reflection: flip the sign
  Direct,         // fresh draw from the reflected-parallel law
  IndependentMH,  // uniform proposal on the magnitude, MH-corrected
  RandomWalkMH,   // wrapped random-walk proposal on the magnitude
  Mixture         // identity with some probability, else an inner variant
};

struct ParallelKernel {
  ParallelVariant variant = ParallelVariant::Direct;
  double rw_half_width = 0.5;    // RandomWalkMH proposal half-width
  double mix_identity_weight = 0.5;
  ParallelVariant mix_inner = ParallelVariant::Direct;
};

// Update of the orthogonal component at an event.
enum class OrthogonalVariant {
  Identity,
  Full,            // fresh draw in the orthogonal complement
  Switch,          // swap the coordinates along a random orthonormal pair
  PerpSwitch,      // quarter-turn rotation in a random 2-plane
  RanP,            // random rotation of a random p-frame
  AutoRegressive,  // ar y + sqrt(1 - ar^2) fresh Gaussian (gaussian law only)
  Mixture
};

// Sign convention after the orthogonal transform: keep it as-is, or flip the
// whole output so its inner product with the input is nonnegative.
enum class Polarity { Naive, Positive };

struct OrthogonalKernel {
  OrthogonalVariant variant = OrthogonalVariant::Identity;
  Polarity polarity = Polarity::Naive;
  int ranp_order = 2;
  std::optional<double> ranp_angle;  // fixed angle for p = 2; default uniform
  double ar_coefficient = 0.9;
  double mix_identity_weight = 0.5;
  OrthogonalVariant mix_inner = OrthogonalVariant::Switch;
};

struct KernelSpec {
  ParallelKernel parallel;
  OrthogonalKernel orthogonal;
  DirectionLaw law;
};

// Throws std::invalid_argument on incompatible combinations: MH parallel
// kernels need the sphere law, the auto-regressive orthogonal kernel needs
// the Gaussian law, ranp needs 2 <= p <= dim - 1, weights must be
// probabilities, mixtures cannot nest.
void validate_kernels(const KernelSpec& spec);

// New parallel coordinate given the pre-event one (positive at an event).
double apply_parallel(const ParallelKernel& kernel, const DirectionLaw& law,
                      double y_par, Rng& rng);

// Transformed orthogonal component. Switch-type kernels degrade to the
// identity when the orthogonal complement has dimension < 2.
Vec apply_orthogonal(const OrthogonalKernel& kernel, const DirectionLaw& law,
                     const GradientFrame& frame, const Vec& y_perp, Rng& rng);

// Full event update: split y against the frame, apply both kernels, rescale
// the orthogonal part in sphere mode so the result stays unit-norm, and
// reassemble. A degenerate frame falls back to a fresh direction draw.
Vec assemble_direction(const KernelSpec& spec, const GradientFrame& frame,
                       const Vec& y, Rng& rng);

}  // namespace fec
