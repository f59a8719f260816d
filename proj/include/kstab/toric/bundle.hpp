#pragma once

#include <optional>

#include "kstab/core/piecewise.hpp"
#include "kstab/geometry/mesh.hpp"

namespace kstab {

/// Futaki invariant and squared norm of the test-configuration given by a convex function f
/// on the momentum domain of a toric bundle with density data (Q1, Q2).
template <class V>
struct BundleFutaki {
  V futaki;
  V norm_sq;
  V a0, a1;
  V mean;  // Q1 dmu average of f
};

/// Polygon domain, f piecewise linear on a grid.
inline BundleFutaki<Rational> toric_bundle_futaki(const PLFunction& f, const Poly2Q& Q1, const Poly2Q& Q2) {
  const auto& P = f.mesh().polygon();
  if (Q1.total_degree() > 2) throw Error(ErrorCode::unsupported_degree, "Q1 of degree above 2 exceeds the exact norm bound");
  check_weight_degree(Q2);
  // Q1 > 0: affine case certified at the vertices, quadratic case checked on every grid node
  auto positive_at = [&](const Vec2& p) { return Q1(p.x, p.y) > 0; };
  bool ok = true;
  for (const auto& v : P.vertices()) ok = ok && positive_at(v);
  if (Q1.total_degree() == 2)
    for (const auto& v : f.mesh().nodes()) ok = ok && positive_at(v);
  if (!ok) throw PreconditionError("Q1 must be positive on the polygon");
  BundleFutaki<Rational> r;
  r.a0 = integrate_interior(P, Q1);
  r.a1 = integrate_boundary(P, Q1) / 2 + integrate_interior(P, Q2);
  Rational fq1 = integrate(f, Region::interior, Q1);
  r.futaki = integrate(f, Region::boundary, Q1) / 2 + integrate(f, Region::interior, Q2) - r.a1 / r.a0 * fq1;
  r.mean = fq1 / r.a0;
  r.norm_sq = integrate_square(f, Q1) - fq1 * fq1 / r.a0;
  return r;
}

/// Interval domain [lo, hi]; boundary integration is evaluation at the two endpoints with unit weights.
/// Integrals are exact log-linear forms, since pieces of f may carry (1+tau)^-e.
template <class T>
struct IntervalBundleFutaki {
  T a0, a1;
  LogLinear<T> futaki;
  LogLinear<T> weighted;  // int f Q1
  LogLinear<T> square;    // int f^2 Q1

  Real futaki_value() const { return futaki.value(); }
  Real mean_value() const { return weighted.value() / real_of(a0); }
  Real norm_sq_value() const {
    Real w = weighted.value();
    return square.value() - w * w / real_of(a0);
  }
  /// Exact values when no logarithms occur.
  std::optional<T> exact_futaki() const {
    if (futaki.has_logs()) return std::nullopt;
    return futaki.rational;
  }
  std::optional<T> exact_norm_sq() const {
    if (weighted.has_logs() || square.has_logs()) return std::nullopt;
    return square.rational - weighted.rational * weighted.rational / a0;
  }

 private:
  static Real real_of(const T& x) {
    if constexpr (std::is_same_v<T, Rational>) return to_real(x);
    else return Real(x);
  }
};

template <class T>
IntervalBundleFutaki<T> toric_bundle_futaki(const PiecewiseFunction<T>& f, const Poly<T>& Q1, const Poly<T>& Q2) {
  T lo = f.lo(), hi = f.hi();
  bool positive = Q1(lo) > T(0) && Q1(hi) > T(0);
  if constexpr (std::is_same_v<T, Rational>) {
    positive = positive && constant_sign_on(Q1, lo, hi) > 0;
  } else {
    if (Q1.degree() > 1)
      for (int i = 1; i < 1000 && positive; ++i) positive = Q1(lo + (hi - lo) * T(i) / T(1000)) > T(0);
  }
  if (!positive) throw PreconditionError("Q1 must be positive on the interval");
  IntervalBundleFutaki<T> r;
  r.a0 = Q1.integrate(lo, hi);
  r.a1 = (Q1(lo) + Q1(hi)) / T(2) + Q2.integrate(lo, hi);
  r.weighted = f.integrate(Q1);
  r.square = f.integrate_square(Q1);
  r.futaki.rational = (f(lo) * Q1(lo) + f(hi) * Q1(hi)) / T(2);
  r.futaki += f.integrate(Q2);
  LogLinear<T> corr = r.weighted;
  corr *= -r.a1 / r.a0;
  r.futaki += corr;
  return r;
}

}  // namespace kstab
