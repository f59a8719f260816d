#pragma once

#include <utility>
#include <vector>

#include "kstab/core/poly.hpp"

namespace kstab {

/// Exact value of the form rational + sum_i coeff_i * log(arg_i).
template <class T>
struct LogLinear {
  T rational = T(0);
  std::vector<std::pair<T, T>> logs;

  LogLinear& operator+=(const LogLinear& o) {
    rational += o.rational;
    for (const auto& l : o.logs) logs.push_back(l);
    return *this;
  }
  LogLinear& operator*=(const T& s) {
    rational *= s;
    for (auto& l : logs) l.first *= s;
    return *this;
  }
  bool has_logs() const {
    for (const auto& l : logs)
      if (l.first != T(0)) return true;
    return false;
  }
  Real value() const {
    Real v = to_real_any(rational);
    for (const auto& [c, x] : logs)
      if (c != T(0)) v += to_real_any(c) * log(to_real_any(x));
    return v;
  }

 private:
  static Real to_real_any(const T& x) {
    if constexpr (std::is_same_v<T, Rational>) return to_real(x);
    else return Real(x);
  }
};

/// Integral over [a, b] of p(tau) / (1 + tau)^e, with a, b > -1.
template <class T>
LogLinear<T> integrate_over_one_plus(const Poly<T>& p, int e, const T& a, const T& b) {
  if (e < 0) throw DomainError("negative power of (1 + tau)");
  if (!(a > T(-1)) || !(b > T(-1))) throw DomainError("interval must avoid tau = -1");
  // p(u - 1) in u = 1 + tau, then integrate term by term
  Poly<T> q = p.compose_affine(T(-1), T(1));
  T ua = T(1) + a, ub = T(1) + b;
  LogLinear<T> out;
  T log_coeff(0);
  for (int k = 0; k <= q.degree(); ++k) {
    T ck = q.coeff(k);
    if (ck == T(0)) continue;
    int pw = k - e + 1;  // exponent after integration
    if (pw == 0) {
      log_coeff += ck;
    } else {
      T hi(1), lo(1);
      for (int i = 0; i < std::abs(pw); ++i) {
        hi *= ub;
        lo *= ua;
      }
      if (pw < 0) {
        hi = T(1) / hi;
        lo = T(1) / lo;
      }
      out.rational += ck * (hi - lo) / T(static_cast<long>(pw));
    }
  }
  if (log_coeff != T(0)) out.logs.push_back({log_coeff, ub / ua});
  return out;
}

/// Function p(tau) / (1 + tau)^e on [a, b].
template <class T>
struct RationalPiece {
  T a, b;
  Poly<T> numer;
  int e = 0;

  template <class U = T>
  U operator()(const U& tau) const {
    U v = numer(tau);
    U base = U(1) + tau;
    for (int i = 0; i < e; ++i) v /= base;
    return v;
  }
  bool is_affine() const { return e == 0 && numer.degree() <= 1; }
};

/// Piecewise function on consecutive intervals, each piece p / (1 + tau)^e.
template <class T>
class PiecewiseFunction {
 public:
  PiecewiseFunction() = default;
  explicit PiecewiseFunction(std::vector<RationalPiece<T>> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw DomainError("piecewise function needs at least one piece");
    for (size_t i = 0; i < pieces_.size(); ++i) {
      if (!(pieces_[i].a < pieces_[i].b)) throw DomainError("piece intervals must have positive length");
      if (i > 0 && pieces_[i].a != pieces_[i - 1].b) throw DomainError("pieces must be consecutive");
    }
  }

  static PiecewiseFunction affine(const T& a, const T& b, const T& c0, const T& c1) {
    return PiecewiseFunction({{a, b, Poly<T>({c0, c1}), 0}});
  }

  const std::vector<RationalPiece<T>>& pieces() const { return pieces_; }
  T lo() const { return pieces_.front().a; }
  T hi() const { return pieces_.back().b; }

  /// Value at tau; at a breakpoint the left piece wins except at the left end.
  T operator()(const T& tau) const {
    for (const auto& p : pieces_)
      if (tau <= p.b) return p(tau);
    return pieces_.back()(tau);
  }

  /// Integral of f * w over its domain.
  LogLinear<T> integrate(const Poly<T>& w) const {
    LogLinear<T> s;
    for (const auto& p : pieces_) s += integrate_over_one_plus(p.numer * w, p.e, p.a, p.b);
    return s;
  }

  /// Integral of f^2 * w.
  LogLinear<T> integrate_square(const Poly<T>& w) const {
    LogLinear<T> s;
    for (const auto& p : pieces_) s += integrate_over_one_plus(p.numer * p.numer * w, 2 * p.e, p.a, p.b);
    return s;
  }

  PiecewiseFunction operator+(const T& s) const {
    auto out = *this;
    for (auto& p : out.pieces_) {
      Poly<T> shift = Poly<T>::constant(s);
      for (int i = 0; i < p.e; ++i) shift = shift * Poly<T>({T(1), T(1)});
      p.numer = p.numer + shift;
    }
    return out;
  }
  PiecewiseFunction operator*(const T& s) const {
    auto out = *this;
    for (auto& p : out.pieces_) p.numer = p.numer * s;
    return out;
  }

 private:
  std::vector<RationalPiece<T>> pieces_;
};

}  // namespace kstab
