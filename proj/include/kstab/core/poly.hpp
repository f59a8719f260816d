#pragma once

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <vector>

#include "kstab/core/numeric.hpp"

namespace kstab {

/// Dense univariate polynomial, coefficients in ascending degree.
/// Trailing zeros are trimmed, so the zero polynomial has no coefficients.
template <class T>
class Poly {
 public:
  Poly() = default;
  Poly(std::initializer_list<T> c) : c_(c) { trim(); }
  explicit Poly(std::vector<T> c) : c_(std::move(c)) { trim(); }
  static Poly constant(const T& v) { return Poly(std::vector<T>{v}); }
  static Poly monomial(const T& coef, size_t deg) {
    std::vector<T> c(deg + 1, T(0));
    c[deg] = coef;
    return Poly(std::move(c));
  }
  /// x - r
  static Poly linear_root(const T& r) { return Poly({T(-r), T(1)}); }

  bool is_zero() const { return c_.empty(); }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<T>& coeffs() const { return c_; }
  T coeff(size_t i) const { return i < c_.size() ? c_[i] : T(0); }
  T lead() const { return c_.empty() ? T(0) : c_.back(); }

  template <class U = T>
  U operator()(const U& x) const {
    U acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + convert<U>(*it);
    return acc;
  }

  Poly derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<T> d(c_.size() - 1);
    for (size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * T(static_cast<long>(i));
    return Poly(std::move(d));
  }

  /// Antiderivative vanishing at 0.
  Poly antiderivative() const {
    std::vector<T> d(c_.size() + 1, T(0));
    for (size_t i = 0; i < c_.size(); ++i) d[i + 1] = c_[i] / T(static_cast<long>(i + 1));
    return Poly(std::move(d));
  }

  T integrate(const T& a, const T& b) const {
    Poly F = antiderivative();
    return F(b) - F(a);
  }

  /// p(a + s x)
  Poly compose_affine(const T& a, const T& s) const {
    Poly out;
    Poly lin({a, s});
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) out = out * lin + Poly::constant(*it);
    return out;
  }

  Poly compose(const Poly& q) const {
    Poly out;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) out = out * q + Poly::constant(*it);
    return out;
  }

  Poly operator-() const {
    std::vector<T> d(c_);
    for (auto& v : d) v = -v;
    return Poly(std::move(d));
  }
  Poly& operator+=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
    for (size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    trim();
    return *this;
  }
  Poly& operator-=(const Poly& o) { return *this += -o; }
  Poly& operator*=(const T& s) {
    for (auto& v : c_) v *= s;
    trim();
    return *this;
  }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(Poly a, const T& s) { return a *= s; }
  friend Poly operator*(const T& s, Poly a) { return a *= s; }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<T> d(a.c_.size() + b.c_.size() - 1, T(0));
    for (size_t i = 0; i < a.c_.size(); ++i)
      for (size_t j = 0; j < b.c_.size(); ++j) d[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(d));
  }
  friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }
  friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

  /// Euclidean division; requires a field of coefficients.
  static std::pair<Poly, Poly> divmod(const Poly& num, const Poly& den) {
    if (den.is_zero()) throw DomainError("polynomial division by zero");
    std::vector<T> r = num.c_;
    int dd = den.degree();
    if (num.degree() < dd) return {Poly(), num};
    std::vector<T> q(num.degree() - dd + 1, T(0));
    for (int k = num.degree() - dd; k >= 0; --k) {
      T f = r[k + dd] / den.c_.back();
      q[k] = f;
      for (int j = 0; j <= dd; ++j) r[k + j] -= f * den.c_[j];
    }
    r.resize(dd);
    return {Poly(std::move(q)), Poly(std::move(r))};
  }
  friend Poly operator/(const Poly& a, const Poly& b) { return divmod(a, b).first; }
  friend Poly operator%(const Poly& a, const Poly& b) { return divmod(a, b).second; }

  Poly monic() const {
    if (is_zero()) return {};
    return *this * (T(1) / lead());
  }

  template <class U>
  Poly<U> cast() const {
    std::vector<U> d;
    d.reserve(c_.size());
    for (const auto& v : c_) d.push_back(convert<U>(v));
    return Poly<U>(std::move(d));
  }

  std::string str(const char* var = "x") const {
    if (is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (int i = degree(); i >= 0; --i) {
      if (c_[i] == T(0)) continue;
      if (!first) os << " + ";
      first = false;
      os << "(" << scalar_str(c_[i]) << ")";
      if (i >= 1) os << "*" << var;
      if (i >= 2) os << "^" << i;
    }
    return os.str();
  }

 private:
  std::vector<T> c_;

  void trim() {
    while (!c_.empty() && c_.back() == T(0)) c_.pop_back();
  }

  template <class U, class V>
  static U convert(const V& v) {
    if constexpr (std::is_same_v<U, V>) return v;
    else if constexpr (std::is_same_v<V, Rational>) return from_rational<U>(v);
    else return static_cast<U>(v);
  }

  static std::string scalar_str(const T& v) {
    if constexpr (std::is_same_v<T, Rational>) return to_string(v);
    else if constexpr (std::is_same_v<T, Real>) return to_decimal(v, 20);
    else {
      std::ostringstream os;
      os << v;
      return os.str();
    }
  }
};

using PolyQ = Poly<Rational>;
using PolyR = Poly<Real>;

inline PolyQ poly_gcd(PolyQ a, PolyQ b) {
  while (!b.is_zero()) {
    PolyQ r = a % b;
    a = std::move(b);
    b = std::move(r);
  }
  return a.monic();
}

/// Product of the distinct irreducible factors of p (same real roots, all simple).
inline PolyQ squarefree_part(const PolyQ& p) {
  if (p.degree() <= 0) return p;
  PolyQ g = poly_gcd(p, p.derivative());
  return (p / g).monic();
}

/// Sturm sequence p0 = p, p1 = p', p_{i+1} = -rem(p_{i-1}, p_i).
inline std::vector<PolyQ> sturm_sequence(const PolyQ& p) {
  std::vector<PolyQ> seq{p, p.derivative()};
  while (!seq.back().is_zero()) {
    PolyQ r = -(seq[seq.size() - 2] % seq.back());
    if (r.is_zero()) break;
    seq.push_back(std::move(r));
  }
  if (seq.back().is_zero()) seq.pop_back();
  return seq;
}

inline int sign_variations(const std::vector<PolyQ>& seq, const Rational& x) {
  int count = 0, prev = 0;
  for (const auto& q : seq) {
    int s = sign(q(x));
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++count;
    prev = s;
  }
  return count;
}

/// Sign variations at +infinity / -infinity (sign of leading coefficient, parity of degree).
inline int sign_variations_at_infinity(const std::vector<PolyQ>& seq, bool positive) {
  int count = 0, prev = 0;
  for (const auto& q : seq) {
    int s = sign(q.lead());
    if (!positive && q.degree() % 2 == 1) s = -s;
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++count;
    prev = s;
  }
  return count;
}

/// Bound B with every real root of p in (-B, B).
inline Rational cauchy_root_bound(const PolyQ& p) {
  Rational m(0);
  for (int i = 0; i < p.degree(); ++i) m = std::max(m, abs(Rational(p.coeff(i) / p.lead())));
  return m + 1;
}

struct RootInterval {
  Rational lo, hi;  // root lies in (lo, hi], or equals lo == hi exactly
  bool exact = false;
  Rational midpoint() const { return (lo + hi) / 2; }
};

/// Sturm-certified counting and isolation of distinct real roots of a nonzero polynomial.
class SturmIsolator {
 public:
  explicit SturmIsolator(const PolyQ& p) {
    if (p.is_zero()) throw DomainError("root isolation of the zero polynomial");
    sqf_ = squarefree_part(p);
    seq_ = sturm_sequence(sqf_);
  }

  const PolyQ& squarefree() const { return sqf_; }

  /// Distinct roots in the half-open interval (a, b].
  int count_half_open(const Rational& a, const Rational& b) const {
    if (sqf_.degree() <= 0 || !(a < b)) return 0;
    return sign_variations(seq_, a) - sign_variations(seq_, b);
  }

  /// Distinct roots in the open interval (a, b).
  int count_open(const Rational& a, const Rational& b) const {
    if (!(a < b)) return 0;
    return count_half_open(a, b) - (sqf_(b) == 0 ? 1 : 0);
  }

  int count_all() const {
    if (sqf_.degree() <= 0) return 0;
    return sign_variations_at_infinity(seq_, false) - sign_variations_at_infinity(seq_, true);
  }

  /// Isolating intervals for roots in (a, b], each refined to width <= width.
  std::vector<RootInterval> isolate(const Rational& a, const Rational& b, const Rational& width) const {
    if (width <= 0) throw DomainError("isolation width must be positive");
    std::vector<RootInterval> out;
    split(a, b, width, out);
    std::sort(out.begin(), out.end(), [](const RootInterval& x, const RootInterval& y) { return x.lo < y.lo; });
    return out;
  }

  /// Shrinks an isolating interval (one root in (lo, hi]) to width <= width by bisection.
  RootInterval refine(RootInterval r, const Rational& width) const {
    if (r.exact) return r;
    if (sqf_(r.hi) == 0) return {r.hi, r.hi, true};
    while (r.hi - r.lo > width) {
      Rational mid = (r.lo + r.hi) / 2;
      Rational v = sqf_(mid);
      if (v == 0) return {mid, mid, true};
      if (count_half_open(r.lo, mid) == 1) r.hi = mid;
      else r.lo = mid;
    }
    return r;
  }

 private:
  PolyQ sqf_;
  std::vector<PolyQ> seq_;

  void split(const Rational& a, const Rational& b, const Rational& width, std::vector<RootInterval>& out) const {
    int n = count_half_open(a, b);
    if (n == 0) return;
    if (n == 1) {
      out.push_back(refine({a, b, false}, width));
      return;
    }
    Rational mid = (a + b) / 2;
    split(a, mid, width, out);
    split(mid, b, width, out);
  }
};

struct IsolationRange {
  std::optional<Rational> lo, hi;  // absent = unbounded
};

/// Isolating intervals for the distinct real roots of p in the open range (lo, hi).
inline std::vector<RootInterval> isolate_real_roots(const PolyQ& p, const IsolationRange& range, const Rational& precision) {
  SturmIsolator iso(p);
  if (iso.squarefree().degree() <= 0) return {};
  Rational bound = cauchy_root_bound(iso.squarefree());
  Rational lo = range.lo ? *range.lo : Rational(-bound);
  Rational hi = range.hi ? *range.hi : bound;
  if (!(lo < hi)) return {};
  auto roots = iso.isolate(lo, hi, precision);
  // drop a root sitting exactly on the excluded upper endpoint
  roots.erase(std::remove_if(roots.begin(), roots.end(),
                             [&](const RootInterval& r) { return r.exact && r.lo == hi && range.hi; }),
              roots.end());
  return roots;
}

inline std::vector<RootInterval> isolate_real_roots(const PolyQ& p, const Rational& precision) {
  return isolate_real_roots(p, IsolationRange{}, precision);
}

/// Sign of p on the open interval (a, b) if constant there, else 0 (also 0 when p has a root inside).
inline int constant_sign_on(const PolyQ& p, const Rational& a, const Rational& b) {
  if (p.is_zero()) return 0;
  if (p.degree() == 0) return sign(p.lead());
  SturmIsolator iso(p);
  if (iso.count_open(a, b) > 0) return 0;
  return sign(p((a + b) / 2));
}

/// Exact rational roots in (lo, hi]: isolates, then tests the simplest rational of each tiny interval.
inline std::vector<Rational> rational_roots_in(const PolyQ& p, const Rational& lo, const Rational& hi) {
  std::vector<Rational> out;
  if (p.is_zero()) return out;
  SturmIsolator iso(p);
  if (iso.squarefree().degree() <= 0) return out;
  // a rational root n/d has d | lead and n | const after clearing denominators; bisecting below 1/(2 lead^2) isolates it
  Integer lcm_den(1);
  for (const auto& c : iso.squarefree().coeffs()) lcm_den = bmp::lcm(lcm_den, denom(c));
  Integer lead = numer(iso.squarefree().lead() * Rational(lcm_den));
  if (lead < 0) lead = -lead;
  Rational width = Rational(1) / Rational(Integer(2 * lead * lead + 1));
  for (auto r : iso.isolate(lo, hi, width)) {
    if (r.exact) {
      out.push_back(r.lo);
      continue;
    }
    Rational cand = simplest_between(r.lo, r.hi);
    if (cand > r.lo && iso.squarefree()(cand) == 0) out.push_back(cand);
    else if (iso.squarefree()(r.hi) == 0) out.push_back(r.hi);
  }
  return out;
}

/// Exact Lagrange interpolation through (x_i, y_i) with distinct nodes.
inline PolyQ lagrange_fit(const std::vector<Rational>& xs, const std::vector<Rational>& ys) {
  if (xs.size() != ys.size() || xs.empty()) throw Error(ErrorCode::arity, "lagrange_fit: node/value size mismatch");
  PolyQ out;
  for (size_t i = 0; i < xs.size(); ++i) {
    PolyQ basis = PolyQ::constant(Rational(1));
    Rational den(1);
    for (size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      if (xs[i] == xs[j]) throw Error(ErrorCode::arity, "lagrange_fit: repeated node");
      basis = basis * PolyQ::linear_root(xs[j]);
      den *= xs[i] - xs[j];
    }
    out += basis * (ys[i] / den);
  }
  return out;
}

}  // namespace kstab
