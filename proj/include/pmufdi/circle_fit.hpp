#pragma once

#include <array>
#include <span>

#include "pmufdi/phasor.hpp"

namespace pmufdi {

/// Algebraic circle a|x|^2 + b.x + c = 0 with |(a, b1, b2, c)| = 1.
struct CircleFit {
  Phasor center;                 // (-b1 / 2a, -b2 / 2a)
  double radius = 0.0;           // sqrt(|b|^2 / 4a^2 - c / a)
  std::array<double, 4> coeffs;  // (a, b1, b2, c)
  double condition = 0.0;        // smallest singular value of the design matrix
};

/// Least-squares algebraic fit: rows [x^2 + y^2, x, y, 1], coefficients are
/// the right singular vector of the smallest singular value. Throws
/// DegenerateFitError when the points do not pin down a circle (collinear,
/// coincident) and std::invalid_argument for fewer than 3 points.
CircleFit fit_circle(std::span<const Phasor> points);

/// Algebraic residual |B u| of the circle (center, radius) on `points`, with
/// u normalised to unit length.
double algebraic_residual(std::span<const Phasor> points, Phasor center,
                          double radius);

}  // namespace pmufdi
