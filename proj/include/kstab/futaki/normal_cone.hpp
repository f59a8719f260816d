#pragma once

#include <optional>

#include "kstab/core/poly.hpp"

namespace kstab {

/// Intersection numbers on a surface X with polarization L and a smooth curve Z.
struct SurfaceDivisorData {
  Rational zz, lz, ll, kl, kz;
  Rational adjunction;  // (K + Z).Z

  void validate() const {
    if (ll <= 0) throw DomainError("L.L must be positive for an ample polarization");
    if (adjunction != kz + zz) throw DomainError("(K+Z).Z must equal K.Z + Z.Z");
  }
};

/// The section S_infinity of the genus-2 ruled surface with L.L = m^2 + 2m.
inline SurfaceDivisorData ruled_surface_data(const Rational& m) {
  return {Rational(-1), Rational(1), m * m + 2 * m, m - 2, Rational(3), Rational(2)};
}

/// Leading terms of chi(L^k I^{xk} / I^{xk+1}) for a divisor on a surface.
inline PolyQ normal_cone_alpha1(const SurfaceDivisorData& d) { return PolyQ({d.lz, -d.zz}); }
inline PolyQ normal_cone_alpha2(const SurfaceDivisorData& d) { return PolyQ::constant(-d.adjunction / 2); }

/// -n K.L^{n-1} / (2 L^n) with n = 2.
inline Rational surface_slope(const SurfaceDivisorData& d) { return -d.kl / d.ll; }

/// Futaki invariant of the deformation to the normal cone of Z with parameter c.
inline Rational normal_cone_futaki(const SurfaceDivisorData& d, const Rational& c,
                                   const std::optional<Rational>& seshadri_bound = std::nullopt) {
  d.validate();
  if (c <= 0) throw DomainError("c must be positive");
  if (seshadri_bound && c >= *seshadri_bound) throw DomainError("c must stay below the supplied Seshadri bound");
  PolyQ weight({c, Rational(-1)});  // c - x
  PolyQ a1 = normal_cone_alpha1(d), a2 = normal_cone_alpha2(d);
  Rational zero(0);
  return (weight * a2).integrate(zero, c) + c / 2 * a1(zero) - (weight * a1).integrate(zero, c) * surface_slope(d);
}

}  // namespace kstab
