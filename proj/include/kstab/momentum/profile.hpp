#pragma once

#include <array>
#include <string>

#include "kstab/core/piecewise.hpp"

namespace kstab {

/// Which ends of the momentum interval are compactified smoothly (phi' = +-2) or left as complete cusps (phi' = 0).
enum class BoundaryClass { smooth, complete_no_s0, complete_no_sinf, complete_both };

inline std::string boundary_class_name(BoundaryClass b) {
  switch (b) {
    case BoundaryClass::smooth: return "smooth";
    case BoundaryClass::complete_no_s0: return "no-szero";
    case BoundaryClass::complete_no_sinf: return "no-sinf";
    case BoundaryClass::complete_both: return "complete-both";
  }
  return "?";
}

inline BoundaryClass parse_boundary_class(const std::string& s) {
  if (s == "smooth") return BoundaryClass::smooth;
  if (s == "no-szero" || s == "no-s0") return BoundaryClass::complete_no_s0;
  if (s == "no-sinf") return BoundaryClass::complete_no_sinf;
  if (s == "complete-both" || s == "both") return BoundaryClass::complete_both;
  throw ParseError("unknown boundary class '" + s + "'");
}

/// (phi'(a), phi'(b)) for each class.
inline std::pair<int, int> boundary_slopes(BoundaryClass b) {
  switch (b) {
    case BoundaryClass::smooth: return {2, -2};
    case BoundaryClass::complete_no_s0: return {0, -2};
    case BoundaryClass::complete_no_sinf: return {2, 0};
    case BoundaryClass::complete_both: return {0, 0};
  }
  return {0, 0};
}

/// phi(tau) = N(tau) / (1 + tau) on [a, b]; Q(tau) = 1 + tau.
template <class T>
struct MomentumProfile {
  T a, b;
  Poly<T> numerator;
  BoundaryClass boundary = BoundaryClass::smooth;

  T operator()(const T& tau) const { return numerator(tau) / (T(1) + tau); }
  T derivative(const T& tau) const {
    T q = T(1) + tau;
    return (numerator.derivative()(tau) * q - numerator(tau)) / (q * q);
  }
  T second_derivative(const T& tau) const {
    T q = T(1) + tau;
    return (numerator.derivative().derivative()(tau) * q * q - T(2) * numerator.derivative()(tau) * q +
            T(2) * numerator(tau)) /
           (q * q * q);
  }
};

namespace detail {

/// Dense elimination with largest-magnitude pivoting; works for exact and floating scalars.
template <class T, size_t n>
std::array<T, n> solve_small(std::array<std::array<T, n + 1>, n> m) {
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    auto mag = [](const T& x) { return x < T(0) ? T(-x) : x; };
    for (size_t r = col + 1; r < n; ++r)
      if (mag(m[r][col]) > mag(m[piv][col])) piv = r;
    if (m[piv][col] == T(0)) throw Error(ErrorCode::internal, "singular boundary-value system");
    std::swap(m[piv], m[col]);
    for (size_t r = 0; r < n; ++r) {
      if (r == col || m[r][col] == T(0)) continue;
      T f = m[r][col] / m[col][col];
      for (size_t c = col; c <= n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::array<T, n> x;
  for (size_t i = 0; i < n; ++i) x[i] = m[i][n] / m[i][i];
  return x;
}

}  // namespace detail

/// Extremal profile: (1+tau) phi = -A tau^4/6 - (A+B) tau^3/3 - B tau^2 - 2 tau^2 + C tau + D,
/// with (A, B, C, D) fixed by the four boundary conditions of the class. Scalar curvature is A tau + B.
template <class T>
MomentumProfile<T> solve_extremal(const T& a, const T& b, BoundaryClass bc) {
  if (!(b > a) || a < T(0)) throw DomainError("need 0 <= a < b");
  // basis polynomials multiplying A, B, C, D and the fixed part
  Poly<T> pa({T(0), T(0), T(0), T(-1) / T(3), T(-1) / T(6)});
  Poly<T> pb({T(0), T(0), T(-1), T(-1) / T(3)});
  Poly<T> pc({T(0), T(1)});
  Poly<T> pd({T(1)});
  Poly<T> fixed({T(0), T(0), T(-2)});
  auto [sa, sb] = boundary_slopes(bc);
  std::array<std::array<T, 5>, 4> sys;
  auto row = [&](size_t i, auto&& eval, const T& rhs) {
    sys[i] = {eval(pa), eval(pb), eval(pc), eval(pd), rhs - eval(fixed)};
  };
  row(0, [&](const Poly<T>& p) { return p(a); }, T(0));
  row(1, [&](const Poly<T>& p) { return p(b); }, T(0));
  // with N(a) = 0, phi'(a) = N'(a) / (1 + a)
  row(2, [&](const Poly<T>& p) { return p.derivative()(a); }, T(sa) * (T(1) + a));
  row(3, [&](const Poly<T>& p) { return p.derivative()(b); }, T(sb) * (T(1) + b));
  auto x = detail::solve_small<T, 4>(sys);
  Poly<T> N = pa * x[0] + pb * x[1] + pc * x[2] + pd * x[3] + fixed;
  return {a, b, N, bc};
}

enum class ClosedFormMode { smooth, no_sinf, no_szero, no_szero_shifted, complete_both };

/// Explicit profiles on [0, m]; the shifted mode lives on [shift, m] and is (a+1) phi((tau-a)/(a+1))
/// with phi the no-szero profile on [0, (m-a)/(a+1)].
template <class T>
MomentumProfile<T> closed_form_profile(const T& m, ClosedFormMode mode, const T& shift = T(0)) {
  if (!(m > T(0))) throw DomainError("m must be positive");
  Poly<T> tau({T(0), T(1)});
  auto base = [&](const T& mm, ClosedFormMode md) -> Poly<T> {
    T q = mm * mm + T(6) * mm + T(6);
    Poly<T> t_m({mm, T(-1)});  // m - tau
    switch (md) {
      case ClosedFormMode::smooth:
        return tau * t_m * Poly<T>({q, -mm * mm + T(4) * mm + T(6), T(2) * mm + T(2)}) * (T(2) / (mm * q));
      case ClosedFormMode::no_sinf:
        return tau * t_m * t_m * Poly<T>({q, -mm * mm + T(2) * mm + T(3)}) * (T(2) / (mm * mm * q));
      case ClosedFormMode::no_szero:
        return tau * tau * t_m *
               Poly<T>({-mm * mm * mm + T(3) * mm * mm + T(9) * mm + T(6), T(2) * mm * mm + T(4) * mm + T(3)}) *
               (T(2) / (mm * mm * q));
      case ClosedFormMode::complete_both:
        return tau * tau * t_m * t_m * (T(-2) / q);
      default:
        break;
    }
    throw Error(ErrorCode::internal, "unreachable profile mode");
  };
  switch (mode) {
    case ClosedFormMode::smooth: return {T(0), m, base(m, mode), BoundaryClass::smooth};
    case ClosedFormMode::no_sinf: return {T(0), m, base(m, mode), BoundaryClass::complete_no_sinf};
    case ClosedFormMode::no_szero: return {T(0), m, base(m, mode), BoundaryClass::complete_no_s0};
    case ClosedFormMode::complete_both: return {T(0), m, base(m, mode), BoundaryClass::complete_both};
    case ClosedFormMode::no_szero_shifted: {
      if (shift < T(0) || !(m > shift)) throw DomainError("shift must satisfy 0 <= a < m");
      T s1 = shift + T(1);
      T inner = (m - shift) / s1;
      // (1+tau) psi(tau) = (a+1)^2 N((tau-a)/(a+1))
      Poly<T> N = base(inner, ClosedFormMode::no_szero).compose_affine(-shift / s1, T(1) / s1) * (s1 * s1);
      return {shift, m, N, BoundaryClass::complete_no_s0};
    }
  }
  throw Error(ErrorCode::internal, "unreachable profile mode");
}

/// S(tau) = P(tau) / (1 + tau) with P = -(4 + N'') / 2.
template <class T>
struct ScalarCurve {
  T a, b;
  Poly<T> numer;

  T operator()(const T& tau) const { return numer(tau) / (T(1) + tau); }
  /// S is affine iff P(-1) = 0 and deg P <= 2.
  bool is_affine() const { return numer.degree() <= 2 && numer(T(-1)) == T(0); }
  /// Affine part (slope, intercept) when is_affine.
  std::pair<T, T> affine() const {
    auto [q, r] = Poly<T>::divmod(numer, Poly<T>({T(1), T(1)}));
    return {q.coeff(1), q.coeff(0)};
  }
  /// int S (1 + tau) d tau over [a, b].
  T total() const { return numer.integrate(a, b); }
  RationalPiece<T> piece() const { return {a, b, numer, 1}; }
};

template <class T>
ScalarCurve<T> scalar_curvature(const MomentumProfile<T>& p) {
  Poly<T> P = (Poly<T>::constant(T(4)) + p.numerator.derivative().derivative()) * (T(-1) / T(2));
  return {p.a, p.b, P};
}

/// Scalar curvature on a segment where phi vanishes identically: -2 / (1 + tau).
template <class T>
ScalarCurve<T> zero_segment_curvature(const T& a, const T& b) {
  return {a, b, Poly<T>::constant(T(-2))};
}

/// Average of S against (1 + tau) d tau.
template <class T>
T average_scalar(const ScalarCurve<T>& s) {
  return s.total() / Poly<T>({T(1), T(1)}).integrate(s.a, s.b);
}

/// Sturm certificate that phi > 0 on (a, b).
struct PositivityCertificate {
  bool positive = false;
  PolyQ bracket;          // N with the end-point roots divided out
  int order_at_a = 0;     // vanishing order of phi at a
  int order_at_b = 0;
  int bracket_sign = 0;   // constant sign of the bracket on (a, b), 0 if it changes
  std::string end_behaviour(int order) const {
    if (order <= 1) return "smooth";
    if (order == 2) return "asymptotically-hyperbolic";
    return "degenerate";
  }
};

inline PositivityCertificate positivity_certificate(const MomentumProfile<Rational>& p) {
  PositivityCertificate c;
  if (p.numerator.is_zero()) return c;
  PolyQ q = p.numerator;
  auto strip = [&](const Rational& r, int& order) {
    PolyQ lin = PolyQ::linear_root(r);
    while (q.degree() > 0 && q(r) == 0) {
      q = q / lin;
      ++order;
    }
  };
  strip(p.a, c.order_at_a);
  strip(p.b, c.order_at_b);
  c.bracket = q;
  c.bracket_sign = constant_sign_on(q, p.a, p.b);
  // (tau - a)^i (tau - b)^j has sign (-1)^j on (a, b)
  int factor_sign = c.order_at_b % 2 == 0 ? 1 : -1;
  c.positive = c.bracket_sign * factor_sign > 0;
  return c;
}

}  // namespace kstab
