#pragma once

#include <map>
#include <string>
#include <vector>

#include "kstab/core/poly.hpp"
#include "kstab/futaki/asymptotics.hpp"

namespace kstab {

/// Test-configurations on the genus-2 ruled surface: deformation to the normal cone of one section,
/// either for the whole surface or for the pair with that section as boundary divisor.
enum class RuledMode { whole_surface, pair_s_infinity, pair_s_zero };

inline std::string ruled_mode_name(RuledMode m) {
  switch (m) {
    case RuledMode::whole_surface: return "whole-surface";
    case RuledMode::pair_s_infinity: return "pair-sinf";
    case RuledMode::pair_s_zero: return "pair-s0";
  }
  return "?";
}

/// Exact traces per k. For pair modes the half boundary block is already subtracted,
/// so entries may be half-integers.
struct RuledWeightTables {
  Rational m, c;
  RuledMode mode = RuledMode::whole_surface;
  std::vector<long> ks;
  std::vector<Rational> dim, tr_a, tr_b, tr_ab, tr_bb, tr_aa;
};

namespace detail {

inline Integer scaled_integer(const Rational& x, long k, const char* what) {
  Rational v = x * k;
  if (!is_integer(v)) throw DomainError(std::string(what) + " * k must be an integer for k = " + std::to_string(k));
  return numer(v);
}

inline void check_ruled_range(const Rational& m, const Rational& c) {
  if (m <= 0) throw DomainError("m must be positive");
  if (!(c > 0 && c < m)) throw DomainError("c must lie in (0, m)");
}

}  // namespace detail

/// Sums over the graded pieces l = 0..mk (vanishing order along S_infinity). Piece l has
/// dimension k+l-1; alpha acts with weight -(ck-l) for l < ck and 0 otherwise; beta acts with weight l.
/// pair_s_zero uses the mirrored configuration (dimension k+mk-l-1 on piece l).
inline RuledWeightTables ruled_bruteforce_tables(const Rational& m, const Rational& c, const std::vector<long>& ks,
                                                 RuledMode mode = RuledMode::whole_surface) {
  detail::check_ruled_range(m, c);
  RuledWeightTables t;
  t.m = m;
  t.c = c;
  t.mode = mode;
  t.ks = ks;
  for (long k : ks) {
    if (k < 1) throw DomainError("k must be positive");
    long mk = static_cast<long>(detail::scaled_integer(m, k, "m"));
    long ck = static_cast<long>(detail::scaled_integer(c, k, "c"));
    Integer d(0), a(0), b(0), ab(0), bb(0), aa(0);
    for (long l = 0; l <= mk; ++l) {
      Integer dim = mode == RuledMode::pair_s_zero ? Integer(k + mk - l - 1) : Integer(k + l - 1);
      Integer wa = l < ck ? Integer(l - ck) : Integer(0);
      Integer wb(l);
      d += dim;
      a += wa * dim;
      b += wb * dim;
      ab += wa * wb * dim;
      bb += wb * wb * dim;
      aa += wa * wa * dim;
    }
    Rational D(d), A(a), B(b), AB(ab), BB(bb), AA(aa);
    if (mode != RuledMode::whole_surface) {
      // half of the restriction to the divisor: alpha weight -ck, beta weight 0
      Rational bd = mode == RuledMode::pair_s_infinity ? Rational(k - 1) : Rational(k + mk - 1);
      Rational wa(-ck);
      D -= bd / 2;
      A -= wa * bd / 2;
      AA -= wa * wa * bd / 2;
    }
    t.dim.push_back(D);
    t.tr_a.push_back(A);
    t.tr_b.push_back(B);
    t.tr_ab.push_back(AB);
    t.tr_bb.push_back(BB);
    t.tr_aa.push_back(AA);
  }
  return t;
}

/// Exact interpolants of each table column, with the degree bound each must respect.
struct RuledFits {
  PolyQ dim, tr_a, tr_b, tr_ab, tr_bb, tr_aa;
  bool exact = false;  // every fit has degree within its bound (zero residual at the extra nodes)
  WeightAsymptotics alpha, beta;
  Rational trace_cross;
};

inline RuledFits fit_ruled_tables(const RuledWeightTables& t) {
  const size_t need = 6;  // degree-4 columns plus one residual node
  if (t.ks.size() < need) throw Error(ErrorCode::arity, "need at least 6 values of k to certify the fits");
  std::vector<Rational> xs;
  for (long k : t.ks) xs.emplace_back(k);
  RuledFits f;
  f.dim = lagrange_fit(xs, t.dim);
  f.tr_a = lagrange_fit(xs, t.tr_a);
  f.tr_b = lagrange_fit(xs, t.tr_b);
  f.tr_ab = lagrange_fit(xs, t.tr_ab);
  f.tr_bb = lagrange_fit(xs, t.tr_bb);
  f.tr_aa = lagrange_fit(xs, t.tr_aa);
  f.exact = f.dim.degree() <= 2 && f.tr_a.degree() <= 3 && f.tr_b.degree() <= 3 && f.tr_ab.degree() <= 4 &&
            f.tr_bb.degree() <= 4 && f.tr_aa.degree() <= 4;
  f.alpha = {2, f.dim.coeff(2), f.dim.coeff(1), f.tr_a.coeff(3), f.tr_a.coeff(2), f.tr_aa.coeff(4)};
  f.beta = {2, f.dim.coeff(2), f.dim.coeff(1), f.tr_b.coeff(3), f.tr_b.coeff(2), f.tr_bb.coeff(4)};
  f.trace_cross = f.tr_ab.coeff(4);
  return f;
}

/// The smallest positive k step making mk and ck integral, and n consecutive admissible k from `first`.
inline std::vector<long> admissible_ks(const Rational& m, const Rational& c, size_t count, long first_multiple = 1) {
  Integer step = bmp::lcm(denom(m), denom(c));
  std::vector<long> out;
  for (size_t i = 0; i < count; ++i) out.push_back(static_cast<long>(step) * (first_multiple + static_cast<long>(i)));
  return out;
}

/// Closed-form leading coefficients of the five traces.
struct RuledCoefficients {
  Rational c0, c1;    // d_k
  Rational a0, a1;    // Tr(A_k)
  Rational b0, b1;    // Tr(B_k)
  Rational ab0;       // Tr(A_k B_k) at k^4
  Rational bb0;       // Tr(B_k^2) at k^4
};

inline RuledCoefficients ruled_closed_coefficients(const Rational& m, const Rational& c, RuledMode mode) {
  RuledCoefficients r;
  r.c0 = (m * m + 2 * m) / 2;
  switch (mode) {
    case RuledMode::whole_surface:
      r.c1 = (2 - m) / 2;
      r.a0 = -(c * c * c + 3 * c * c) / 6;
      r.a1 = (c * c - c) / 2;
      r.b0 = (2 * m * m * m + 3 * m * m) / 6;
      r.b1 = m / 2;
      r.ab0 = -(c * c * c * c + 2 * c * c * c) / 12;
      r.bb0 = (3 * m * m * m * m + 4 * m * m * m) / 12;
      break;
    case RuledMode::pair_s_infinity:
      r.c1 = (1 - m) / 2;
      r.a0 = -(c * c * c + 3 * c * c) / 6;
      r.a1 = c * c / 2;
      r.b0 = (2 * m * m * m + 3 * m * m) / 6;
      r.b1 = m / 2;
      r.ab0 = -(c * c * c * c + 2 * c * c * c) / 12;
      r.bb0 = (3 * m * m * m * m + 4 * m * m * m) / 12;
      break;
    case RuledMode::pair_s_zero:
      r.c1 = -(2 * m - 1) / 2;
      r.a0 = c * c * (c - 3 * m - 3) / 6;
      r.a1 = c * c / 2;
      r.b0 = m * m * (m + 3) / 6;
      r.b1 = -m * (m - 1) / 2;
      r.ab0 = c * c * c * (c - 2 * m - 2) / 12;
      r.bb0 = m * m * m * (m + 4) / 12;
      break;
  }
  return r;
}

/// F_chi from the definition, using the closed-form coefficients.
inline Rational ruled_relative_futaki_from_coefficients(const RuledCoefficients& r) {
  WeightAsymptotics alpha{2, r.c0, r.c1, r.a0, r.a1, std::nullopt};
  WeightAsymptotics beta{2, r.c0, r.c1, r.b0, r.b1, r.bb0};
  return *futaki_and_products(alpha, TorusGenerator{beta, r.ab0}).relative_futaki;
}

/// The factor of F_chi whose sign decides stability, as a polynomial in c.
inline PolyQ ruled_bracket(const Rational& m, RuledMode mode) {
  switch (mode) {
    case RuledMode::whole_surface:
      return PolyQ({m * m + 6 * m + 6, -(m * m - 4 * m - 6), 2 * m + 2});
    case RuledMode::pair_s_infinity:
      return PolyQ({-m * m * m + 3 * m * m + 9 * m + 6, 2 * m * m + 4 * m + 3});
    case RuledMode::pair_s_zero:
      return PolyQ({-m * m * m + 3 * m * m + 9 * m + 6, m * m - 2 * m - 3});
  }
  return {};
}

/// Positive prefactor multiplying the bracket (as a function of c, without the bracket).
inline Rational ruled_prefactor(const Rational& m, const Rational& c, RuledMode mode) {
  Rational q = m * m + 6 * m + 6;
  if (mode == RuledMode::whole_surface) return c * (m - c) * (m + 2) / (4 * q);
  return c * c * (m - c) / (2 * m * m * q);
}

/// Closed-form relative Futaki invariant. The whole-surface value carries the printed normalization,
/// which is c0 = m(m+2)/2 times the definition-based value; the sign is unaffected.
inline Rational ruled_relative_futaki(const Rational& m, const Rational& c, RuledMode mode) {
  detail::check_ruled_range(m, c);
  return ruled_prefactor(m, c, mode) * ruled_bracket(m, mode)(c);
}

/// Scale between the closed form and the definition-based value.
inline Rational ruled_closed_form_scale(const Rational& m, RuledMode mode) {
  return mode == RuledMode::whole_surface ? (m * m + 2 * m) / 2 : Rational(1);
}

/// A rational c in (0, m) with F_chi(c) < 0, if one exists (certified by Sturm counting on the bracket).
inline std::optional<Rational> destabilizing_c(const Rational& m, RuledMode mode) {
  if (m <= 0) throw DomainError("m must be positive");
  PolyQ br = ruled_bracket(m, mode);
  if (br.is_zero()) return std::nullopt;
  int s = constant_sign_on(br, Rational(0), m);
  if (s > 0) return std::nullopt;
  if (s < 0) return m / 2;
  // sign changes inside: test the simplest rational in each gap between consecutive roots
  auto roots = isolate_real_roots(br, IsolationRange{Rational(0), m}, m / 1024);
  std::vector<Rational> cuts{Rational(0)};
  for (const auto& r : roots) {
    cuts.push_back(r.lo);
    cuts.push_back(r.hi);
  }
  cuts.push_back(m);
  for (size_t i = 0; i + 1 < cuts.size(); i += 2) {
    if (!(cuts[i] < cuts[i + 1])) continue;
    Rational cand = simplest_between(cuts[i], cuts[i + 1]);
    if (cand == cuts[i] || cand == cuts[i + 1]) cand = (cuts[i] + cuts[i + 1]) / 2;
    if (br(cand) < 0) return cand;
  }
  return std::nullopt;
}

/// Nondegeneracy data for the pair modes.
struct PairNondegeneracy {
  Rational c1_over_c0;      // from the averaged dimensions
  Rational alpha2_over_alpha1;  // dim H^0(D, L^k|D) = alpha1 k + alpha2
  bool scalar_condition;    // c1/c0 < alpha2/alpha1
  Rational second_derivative_at_zero;  // F_chi''(0) of the relative invariant in c
  bool relative_condition;  // F_chi''(0) > 0
};

inline PairNondegeneracy pair_nondegeneracy(const Rational& m, RuledMode mode) {
  if (mode == RuledMode::whole_surface) throw DomainError("nondegeneracy applies to pair modes only");
  if (m <= 0) throw DomainError("m must be positive");
  auto r = ruled_closed_coefficients(m, m / 2, mode);
  PairNondegeneracy out;
  out.c1_over_c0 = r.c1 / r.c0;
  Rational alpha1 = mode == RuledMode::pair_s_infinity ? Rational(1) : Rational(m + 1);
  out.alpha2_over_alpha1 = Rational(-1) / alpha1;
  out.scalar_condition = out.c1_over_c0 < out.alpha2_over_alpha1;
  // F_chi = c^2 (m - c) bracket(c) / (2 m^2 q): second derivative at 0 is 2 m bracket(0) / (2 m^2 q)
  Rational q = m * m + 6 * m + 6;
  out.second_derivative_at_zero = ruled_bracket(m, mode)(Rational(0)) / (m * q);
  out.relative_condition = out.second_derivative_at_zero > 0;
  return out;
}

struct Thresholds {
  RootInterval k1, k2;
  int k1_positive_roots = 0, k2_positive_roots = 0;
};

inline PolyQ k1_quartic() { return PolyQ({-12, -48, -52, -16, 1}); }
inline PolyQ k2_cubic() { return PolyQ({-6, -9, -3, 1}); }

/// Certified isolating intervals for the unique positive roots of the threshold polynomials.
inline Thresholds instability_thresholds(const Rational& precision) {
  if (precision <= 0) throw DomainError("precision must be positive");
  Thresholds t;
  auto r1 = isolate_real_roots(k1_quartic(), IsolationRange{Rational(0), std::nullopt}, precision);
  auto r2 = isolate_real_roots(k2_cubic(), IsolationRange{Rational(0), std::nullopt}, precision);
  t.k1_positive_roots = static_cast<int>(r1.size());
  t.k2_positive_roots = static_cast<int>(r2.size());
  if (r1.size() != 1 || r2.size() != 1) throw Error(ErrorCode::internal, "threshold polynomial root count changed");
  t.k1 = r1[0];
  t.k2 = r2[0];
  return t;
}

}  // namespace kstab
