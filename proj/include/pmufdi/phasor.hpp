#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include "pmufdi/errors.hpp"

namespace pmufdi {

/// One synchrophasor sample in per-unit (real = in-phase, imag = quadrature).
using Phasor = std::complex<double>;

inline bool is_finite(Phasor z) noexcept {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline void require_finite(Phasor z, std::string_view what) {
  if (!is_finite(z)) {
    throw NonFiniteError(std::string(what) + ": non-finite sample");
  }
}

}  // namespace pmufdi
