#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kstab/futaki/bounds.hpp"
#include "kstab/futaki/ruled.hpp"
#include "kstab/momentum/profile.hpp"
#include "kstab/toric/bundle.hpp"

namespace kstab {

/// Jumps of phi, phi', phi'' and S across an interior junction.
template <class T>
struct Junction {
  T tau;
  T phi_jump, dphi_jump, ddphi_jump, scalar_jump;
  T c2_mismatch() const {
    auto mag = [](const T& x) { return x < T(0) ? T(-x) : x; };
    T m = mag(phi_jump);
    if (mag(dphi_jump) > m) m = mag(dphi_jump);
    if (mag(ddphi_jump) > m) m = mag(ddphi_jump);
    return m;
  }
};

/// Consecutive profile segments covering [0, m]; a segment with zero numerator is an explicit plateau.
template <class T>
struct GluedProfile {
  Rational m;
  int regime = 0;  // 0: single extremal profile, 1: two pieces, 2: two pieces with a zero plateau
  T c{0};
  std::vector<MomentumProfile<T>> segments;
  std::vector<ScalarCurve<T>> curvature;
  std::vector<Junction<T>> junctions;
  T s_hat{0};

  T lo() const { return segments.front().a; }
  T hi() const { return segments.back().b; }

  size_t locate(const T& tau) const {
    for (size_t i = 0; i < segments.size(); ++i)
      if (tau <= segments[i].b) return i;
    return segments.size() - 1;
  }
  T phi(const T& tau) const { return segments[locate(tau)](tau); }
  T scalar(const T& tau) const { return curvature[locate(tau)](tau); }

  /// S - S_hat as pieces numer / (1 + tau).
  PiecewiseFunction<T> deviation() const {
    std::vector<RationalPiece<T>> pieces;
    for (const auto& s : curvature)
      pieces.push_back({s.a, s.b, s.numer - Poly<T>({s_hat, s_hat}), 1});
    return PiecewiseFunction<T>(std::move(pieces));
  }
};

template <class T>
GluedProfile<T> assemble_glued(const Rational& m, int regime, const T& c, std::vector<MomentumProfile<T>> segs) {
  GluedProfile<T> g;
  g.m = m;
  g.regime = regime;
  g.c = c;
  g.segments = std::move(segs);
  T total(0), volume(0);
  for (const auto& s : g.segments) {
    g.curvature.push_back(s.numerator.is_zero() ? zero_segment_curvature(s.a, s.b) : scalar_curvature(s));
    total += g.curvature.back().total();
    volume += Poly<T>({T(1), T(1)}).integrate(s.a, s.b);
  }
  g.s_hat = total / volume;
  for (size_t i = 1; i < g.segments.size(); ++i) {
    const auto& L = g.segments[i - 1];
    const auto& R = g.segments[i];
    T t = L.b;
    g.junctions.push_back({t, R(t) - L(t), R.derivative(t) - L.derivative(t),
                           R.second_derivative(t) - L.second_derivative(t),
                           g.curvature[i](t) - g.curvature[i - 1](t)});
  }
  return g;
}

/// m > k1, decided exactly: the threshold quartic is negative on (0, k1) and positive beyond.
inline bool above_k1(const Rational& m) { return m > 0 && k1_quartic()(m) > 0; }

/// Case 1 iff sqrt(m+1) - 1 <= k2. Substituting c = s - 1 into the k2 cubic gives s^3 - 6 s^2 - 1,
/// so with s^2 = m + 1 the test is s (m+1) <= 6m + 7, i.e. (m+1)^3 <= (6m+7)^2.
inline bool gluing_case_one(const Rational& m) {
  Rational s2 = m + 1;
  Rational r = 6 * m + 7;
  return s2 * s2 * s2 <= r * r;
}

/// Exact square root of a rational, if it has one.
inline std::optional<Rational> rational_sqrt(const Rational& r) {
  if (r < 0) return std::nullopt;
  Integer n = numer(r), d = denom(r);
  Integer sn = bmp::sqrt(n), sd = bmp::sqrt(d);
  if (sn * sn != n || sd * sd != d) return std::nullopt;
  return Rational(sn) / Rational(sd);
}

inline Real k2_real() {
  auto t = instability_thresholds(Rational(1) / Rational(bmp::pow(Integer(10), 60)));
  return to_real(t.k2.midpoint());
}

template <class T>
GluedProfile<T> glue_with(const Rational& m, const T& mm, const T& c, const T& k2, bool case_one) {
  if (case_one) {
    auto left = closed_form_profile(c, ClosedFormMode::no_sinf);
    auto right = closed_form_profile(mm, ClosedFormMode::no_szero_shifted, c);
    return assemble_glued<T>(m, 1, c, {left, right});
  }
  auto left = closed_form_profile(k2, ClosedFormMode::no_sinf);
  MomentumProfile<T> plateau{k2, c, Poly<T>(), BoundaryClass::complete_both};
  auto right = closed_form_profile(mm, ClosedFormMode::no_szero_shifted, c);
  return assemble_glued<T>(m, 2, c, {left, plateau, right});
}

/// Calabi-minimizing glued profile for an unstable polarization (m > k1), in multiprecision reals.
inline GluedProfile<Real> glue_calabi_minimizer(const Rational& m) {
  if (!above_k1(m))
    throw PreconditionError("stable polarization: m <= k1, the smooth extremal profile exists");
  Real mm = to_real(m);
  Real k2 = k2_real();
  bool one = gluing_case_one(m);
  Real c = one ? Real(bmp::sqrt(mm + 1) - 1) : Real((mm + 1) / (k2 + 1) - 1);
  return glue_with<Real>(m, mm, c, k2, one);
}

/// Exact glued profile when c = sqrt(m+1) - 1 is rational (case 1 only).
inline std::optional<GluedProfile<Rational>> glue_calabi_minimizer_exact(const Rational& m) {
  if (!above_k1(m) || !gluing_case_one(m)) return std::nullopt;
  auto s = rational_sqrt(m + 1);
  if (!s) return std::nullopt;
  return glue_with<Rational>(m, m, *s - 1, Rational(0), true);
}

/// Single-profile wrapper so the same norm and identity code applies to extremal profiles.
template <class T>
GluedProfile<T> as_glued(const MomentumProfile<T>& p, const Rational& m) {
  return assemble_glued<T>(m, 0, T(0), {p});
}

template <class T>
struct CalabiNorm {
  LogLinear<T> tau_integral_exact;  // int (S - S_hat)^2 (1 + tau) d tau
  Real tau_integral;
  Real quadrature;                  // independent Gauss-Kronrod value
  Real quadrature_error;
  Real full_norm_sq;                // (2 pi)^2 tau_integral
  Real full_norm;
};

template <class T>
CalabiNorm<T> calabi_norm(const GluedProfile<T>& g, double tol = 1e-10) {
  CalabiNorm<T> r;
  r.tau_integral_exact = g.deviation().integrate_square(Poly<T>({T(1), T(1)}));
  r.tau_integral = r.tau_integral_exact.value();
  double quad = 0, err = 0, scale = 0;
  const double s_hat = to_double(g.s_hat);
  for (const auto& s : g.curvature) {
    auto P = s.numer.template cast<double>();
    auto f = [&](double t) {
      double d = P(t) / (1 + t) - s_hat;
      return d * d * (1 + t);
    };
    double e = 0, l1 = 0;
    quad += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, to_double(s.a), to_double(s.b), 15, 1e-14,
                                                                         &e, &l1);
    err += e;
    scale += l1;
  }
  r.quadrature = quad;
  r.quadrature_error = err;
  if (err > tol * std::max(1.0, scale)) throw Error(ErrorCode::tolerance, "Calabi quadrature did not converge");
  if (abs(r.tau_integral - r.quadrature) > Real(1e-8) * (1 + abs(r.tau_integral)))
    throw Error(ErrorCode::tolerance, "exact and quadrature Calabi integrals disagree");
  Real tp = two_pi();
  r.full_norm_sq = tp * tp * r.tau_integral;
  r.full_norm = sqrt(r.full_norm_sq);
  return r;
}

struct FutakiIdentity {
  Real lhs, rhs, residual;
};

/// F(h) from the interval toric-bundle formula against (1/2) int h (S - S_hat)(1 + tau).
template <class T>
FutakiIdentity verify_futaki_identity(const GluedProfile<T>& g, const PiecewiseFunction<T>& h, const T& tol = T(0)) {
  auto mag = [](const T& x) { return x < T(0) ? T(-x) : x; };
  if (mag(h.lo() - g.lo()) > tol || mag(h.hi() - g.hi()) > tol)
    throw DomainError("h must be defined on the momentum interval");
  for (const auto& seg : g.segments) {
    if (seg.numerator.is_zero()) continue;
    const Poly<T>* ref = nullptr;
    for (const auto& p : h.pieces()) {
      if (!(p.b > seg.a) || !(p.a < seg.b)) continue;
      if (!p.is_affine()) throw PreconditionError("h must be linear where phi is positive");
      if (ref) {
        for (int k = 0; k <= 1; ++k)
          if (mag(ref->coeff(k) - p.numer.coeff(k)) > tol)
            throw PreconditionError("h must be linear where phi is positive");
      } else {
        ref = &p.numer;
      }
    }
  }
  Poly<T> q1({T(1), T(1)});
  auto lhs = toric_bundle_futaki(h, q1, Poly<T>::constant(T(-1)));
  // overlap h pieces with curvature pieces
  LogLinear<T> rhs;
  for (const auto& s : g.curvature) {
    Poly<T> dev = s.numer - Poly<T>({g.s_hat, g.s_hat});  // (S - S_hat)(1 + tau)
    for (const auto& p : h.pieces()) {
      T a = p.a > s.a ? p.a : s.a;
      T b = p.b < s.b ? p.b : s.b;
      if (!(b > a)) continue;
      rhs += integrate_over_one_plus(p.numer * dev, p.e, a, b);
    }
  }
  rhs *= T(1) / T(2);
  FutakiIdentity r;
  r.lhs = lhs.futaki_value();
  r.rhs = rhs.value();
  r.residual = abs(r.lhs - r.rhs);
  return r;
}

/// h = S_hat - S: exact pieces where S is affine, piecewise-linear interpolation with `refine` cells elsewhere.
template <class T>
PiecewiseFunction<T> destabilizing_function(const GluedProfile<T>& g, int refine) {
  if (refine < 1) throw DomainError("refine must be at least 1");
  std::vector<RationalPiece<T>> pieces;
  for (const auto& s : g.curvature) {
    if (s.is_affine()) {
      auto [slope, icpt] = s.affine();
      pieces.push_back({s.a, s.b, Poly<T>({g.s_hat - icpt, -slope}), 0});
      continue;
    }
    for (int i = 0; i < refine; ++i) {
      T x0 = s.a + (s.b - s.a) * T(i) / T(refine);
      T x1 = i + 1 == refine ? s.b : s.a + (s.b - s.a) * T(i + 1) / T(refine);
      T y0 = g.s_hat - s(x0), y1 = g.s_hat - s(x1);
      T slope = (y1 - y0) / (x1 - x0);
      pieces.push_back({x0, x1, Poly<T>({y0 - slope * x0, slope}), 0});
    }
  }
  return PiecewiseFunction<T>(std::move(pieces));
}

struct InfimumReport {
  Rational m;
  int regime = 0;
  int refine = 1;
  Real c;
  Real s_hat;
  Real tau_integral;
  Real calabi;            // ||S - S_hat||_{L2}
  Real futaki;            // F(h)
  Real norm_alg;          // (int (h - mean)^2 Q1)^{1/2}
  Real bound;             // 4 pi (-F) / norm_alg
  Real gap;               // |calabi - bound| / calabi
  Real identity_residual;
  Real max_junction_mismatch;
  double differential_factor = 0;  // 2 (2 pi) for n = 2, reported only
};

inline InfimumReport infimum_report(const GluedProfile<Real>& g, int refine) {
  InfimumReport r;
  r.m = g.m;
  r.regime = g.regime;
  r.refine = refine;
  r.c = g.c;
  r.s_hat = g.s_hat;
  auto cn = calabi_norm(g);
  r.tau_integral = cn.tau_integral;
  r.calabi = cn.full_norm;
  auto h = destabilizing_function(g, refine);
  auto bf = toric_bundle_futaki(h, Poly<Real>({Real(1), Real(1)}), Poly<Real>::constant(Real(-1)));
  r.futaki = bf.futaki_value();
  r.norm_alg = sqrt(bf.norm_sq_value());
  r.bound = 2 * two_pi() * (-r.futaki) / r.norm_alg;
  r.gap = abs(r.calabi - r.bound) / r.calabi;
  r.identity_residual = verify_futaki_identity(g, h, Real(1e-30)).residual;
  r.max_junction_mismatch = 0;
  for (const auto& j : g.junctions) r.max_junction_mismatch = std::max(r.max_junction_mismatch, Real(j.c2_mismatch()));
  r.differential_factor = 2 * to_double(two_pi());
  return r;
}

inline InfimumReport infimum_report(const Rational& m, int refine = 1) {
  return infimum_report(glue_calabi_minimizer(m), refine);
}

/// Doubles `refine` until the gap falls below `target` or `max_refine` is passed; returns every step.
inline std::vector<InfimumReport> infimum_sweep(const Rational& m, const Real& target, int max_refine = 1024) {
  auto g = glue_calabi_minimizer(m);
  std::vector<InfimumReport> out;
  for (int r = 1; r <= max_refine; r *= 2) {
    out.push_back(infimum_report(g, r));
    if (out.back().gap < target || g.regime != 2) break;
  }
  return out;
}

struct ProfileSample {
  double tau, phi, scalar;
};

/// n uniform samples over [0, m] plus every junction point, in increasing tau.
template <class T>
std::vector<ProfileSample> sample_profile(const GluedProfile<T>& g, int n) {
  if (n < 2) throw DomainError("sample count must be at least 2");
  std::vector<T> taus;
  T lo = g.lo(), hi = g.hi();
  for (int i = 0; i < n; ++i) taus.push_back(i + 1 == n ? hi : lo + (hi - lo) * T(i) / T(n - 1));
  for (const auto& j : g.junctions) taus.push_back(j.tau);
  std::sort(taus.begin(), taus.end());
  std::vector<ProfileSample> out;
  for (const auto& t : taus) {
    if (!out.empty() && std::abs(out.back().tau - to_double(t)) == 0) continue;
    out.push_back({to_double(t), to_double(g.phi(t)), to_double(g.scalar(t))});
  }
  return out;
}

}  // namespace kstab
