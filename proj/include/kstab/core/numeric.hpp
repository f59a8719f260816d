#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>
#include <type_traits>

#include "kstab/core/errors.hpp"

namespace kstab {

namespace bmp = boost::multiprecision;

/// Exact rational, always in lowest terms with positive denominator (GMP mpq).
using Rational = bmp::number<bmp::gmp_rational, bmp::et_off>;
using Integer = bmp::number<bmp::gmp_int, bmp::et_off>;
/// Runtime-precision binary float (MPFR).
using Real = bmp::number<bmp::mpfr_float_backend<0>, bmp::et_off>;

inline constexpr unsigned default_precision_digits = 50;

inline unsigned precision_digits_from_env() {
  if (const char* s = std::getenv("KSTAB_PRECISION_DIGITS")) {
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end != s && v >= 20 && v <= 10000) return static_cast<unsigned>(v);
  }
  return default_precision_digits;
}

inline unsigned set_real_precision(unsigned digits) {
  Real::default_precision(digits);
  return digits;
}

namespace detail {
inline const unsigned real_precision_init = set_real_precision(precision_digits_from_env());
}

inline unsigned real_precision() { return Real::default_precision(); }

inline Integer numer(const Rational& r) { return bmp::numerator(r); }
inline Integer denom(const Rational& r) { return bmp::denominator(r); }

inline bool is_integer(const Rational& r) { return denom(r) == 1; }

inline Rational rat(long long p, long long q = 1) {
  if (q == 0) throw DomainError("zero denominator");
  return Rational(p) / Rational(q);
}

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline int sign(const Rational& r) { return r > 0 ? 1 : (r < 0 ? -1 : 0); }

inline Integer floor(const Rational& r) {
  Integer q = numer(r) / denom(r);  // truncates toward zero
  if (r < 0 && Rational(q) != r) q -= 1;
  return q;
}

inline Integer ceil(const Rational& r) {
  Integer f = floor(r);
  return Rational(f) == r ? f : Integer(f + 1);
}

/// Parses "p", "p/q", or a finite decimal "-1.25" / "3e-2" exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  s = s.substr(b);
  if (s.empty()) throw ParseError("empty rational");
  auto digits_ok = [](std::string_view t, bool allow_sign) {
    size_t i = 0;
    if (allow_sign && i < t.size() && (t[i] == '-' || t[i] == '+')) ++i;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  };
  auto to_int = [](std::string t) {
    if (!t.empty() && t[0] == '+') t = t.substr(1);
    return Integer(t);
  };
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::string p = s.substr(0, slash), q = s.substr(slash + 1);
    if (!digits_ok(p, true) || !digits_ok(q, false)) throw ParseError("bad rational: " + s);
    Integer den = to_int(q);
    if (den == 0) throw ParseError("zero denominator: " + s);
    return Rational(to_int(p)) / Rational(den);
  }
  std::string mant = s;
  long long exp10 = 0;
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    mant = s.substr(0, e);
    std::string ex = s.substr(e + 1);
    if (!digits_ok(ex, true)) throw ParseError("bad exponent: " + s);
    exp10 = std::stoll(ex);
  }
  std::string intpart = mant, frac;
  if (auto dot = mant.find('.'); dot != std::string::npos) {
    intpart = mant.substr(0, dot);
    frac = mant.substr(dot + 1);
  }
  bool neg = !intpart.empty() && intpart[0] == '-';
  if (!intpart.empty() && (intpart[0] == '-' || intpart[0] == '+')) intpart = intpart.substr(1);
  if (intpart.empty() && frac.empty()) throw ParseError("bad rational: " + s);
  if ((!intpart.empty() && !digits_ok(intpart, false)) || (!frac.empty() && !digits_ok(frac, false)))
    throw ParseError("bad rational: " + s);
  Integer whole(intpart.empty() ? std::string("0") : intpart + frac);
  Rational r(whole);
  exp10 -= static_cast<long long>(frac.size());
  Rational ten(10);
  for (long long i = 0; i < (exp10 < 0 ? -exp10 : exp10); ++i) r = exp10 < 0 ? Rational(r / ten) : Rational(r * ten);
  return neg ? Rational(-r) : r;
}

inline std::string to_string(const Rational& r) {
  if (denom(r) == 1) return numer(r).str();
  return numer(r).str() + "/" + denom(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(const Real& r) { return r.convert_to<double>(); }
inline double to_double(double r) { return r; }

inline Real to_real(const Rational& r) { return Real(numer(r)) / Real(denom(r)); }

/// Decimal string with `sig` significant digits.
inline std::string to_decimal(const Real& r, int sig = 17) {
  return r.str(sig, std::ios_base::scientific);
}

/// Scalar conversion used by templates instantiated over Rational, Real, double or an exact extension field.
template <class T>
T from_rational(const Rational& r) {
  if constexpr (std::is_same_v<T, Rational>) return r;
  else if constexpr (std::is_same_v<T, Real>) return to_real(r);
  else if constexpr (std::is_floating_point_v<T>) return static_cast<T>(to_double(r));
  else return T(r);
}

/// Simplest rational (smallest denominator) in the closed interval [lo, hi].
inline Rational simplest_between(Rational lo, Rational hi) {
  if (lo > hi) std::swap(lo, hi);
  if (lo <= 0 && hi >= 0) return Rational(0);
  if (hi < 0) return -simplest_between(-hi, -lo);
  Integer fl = floor(lo);
  if (Rational(fl) == lo) return lo;
  if (Rational(fl + 1) <= hi) return Rational(Integer(fl + 1));
  // lo, hi share the integer part: recurse on reciprocals of fractional parts
  Rational a = lo - Rational(fl), b = hi - Rational(fl);
  Rational inner = simplest_between(Rational(1) / b, Rational(1) / a);
  return Rational(fl) + Rational(1) / inner;
}

}  // namespace kstab
