#pragma once

#include <boost/math/constants/constants.hpp>

#include "kstab/core/numeric.hpp"

namespace kstab {

inline Real two_pi() { return 2 * boost::math::constants::pi<Real>(); }

/// Lower bound on ||S - S_hat||^2_{L^2} from a destabilizing action on a surface (n = 2).
/// Absolute: 4 (2 pi)^2 F^2 / |alpha|^2. Relative: 2 (2 pi)^2 F^2 / |alpha|^2 + |chi|^2.
inline Real calabi_lower_bound(const Rational& F, const Real& norm_alpha, const Real& norm_chi, bool relative) {
  // relative mode admits F = 0, where the bound reduces to |chi|^2
  if (F > 0 || (F == 0 && !relative))
    throw Error(ErrorCode::precondition, "the bound needs a destabilizing action (F < 0)");
  if (!(norm_alpha > 0)) throw DomainError("norm of the action must be positive");
  Real tp = two_pi();
  Real f = to_real(F);
  Real core = tp * tp * f * f / (norm_alpha * norm_alpha);
  if (relative) return 2 * core + norm_chi * norm_chi;
  return 4 * core;
}

}  // namespace kstab
