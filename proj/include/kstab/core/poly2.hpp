#pragma once

#include <map>
#include <utility>

#include "kstab/core/poly.hpp"

namespace kstab {

/// Sparse bivariate polynomial sum c_ij x^i y^j.
template <class T>
class Poly2 {
 public:
  using Key = std::pair<int, int>;

  Poly2() = default;
  static Poly2 constant(const T& v) { return monomial(v, 0, 0); }
  static Poly2 monomial(const T& v, int i, int j) {
    Poly2 p;
    if (v != T(0)) p.c_[{i, j}] = v;
    return p;
  }
  static Poly2 x() { return monomial(T(1), 1, 0); }
  static Poly2 y() { return monomial(T(1), 0, 1); }
  /// a + b x + c y
  static Poly2 affine(const T& a, const T& b, const T& c) {
    return constant(a) + monomial(b, 1, 0) + monomial(c, 0, 1);
  }

  bool is_zero() const { return c_.empty(); }
  const std::map<Key, T>& terms() const { return c_; }
  T coeff(int i, int j) const {
    auto it = c_.find({i, j});
    return it == c_.end() ? T(0) : it->second;
  }
  int total_degree() const {
    int d = -1;
    for (const auto& [k, v] : c_) d = std::max(d, k.first + k.second);
    return d;
  }
  int degree_x() const {
    int d = -1;
    for (const auto& [k, v] : c_) d = std::max(d, k.first);
    return d;
  }
  int degree_y() const {
    int d = -1;
    for (const auto& [k, v] : c_) d = std::max(d, k.second);
    return d;
  }

  template <class U = T>
  U operator()(const U& xv, const U& yv) const {
    U acc(0);
    for (const auto& [k, v] : c_) acc += from<U>(v) * ipow(xv, k.first) * ipow(yv, k.second);
    return acc;
  }

  Poly2 operator-() const {
    Poly2 p(*this);
    for (auto& [k, v] : p.c_) v = -v;
    return p;
  }
  Poly2& operator+=(const Poly2& o) {
    for (const auto& [k, v] : o.c_) {
      T& slot = c_[k];
      slot += v;
      if (slot == T(0)) c_.erase(k);
    }
    return *this;
  }
  Poly2& operator-=(const Poly2& o) { return *this += -o; }
  Poly2& operator*=(const T& s) {
    if (s == T(0)) {
      c_.clear();
      return *this;
    }
    for (auto& [k, v] : c_) v *= s;
    return *this;
  }
  friend Poly2 operator+(Poly2 a, const Poly2& b) { return a += b; }
  friend Poly2 operator-(Poly2 a, const Poly2& b) { return a -= b; }
  friend Poly2 operator*(Poly2 a, const T& s) { return a *= s; }
  friend Poly2 operator*(const T& s, Poly2 a) { return a *= s; }
  friend Poly2 operator*(const Poly2& a, const Poly2& b) {
    Poly2 out;
    for (const auto& [ka, va] : a.c_)
      for (const auto& [kb, vb] : b.c_) {
        Key k{ka.first + kb.first, ka.second + kb.second};
        T& slot = out.c_[k];
        slot += va * vb;
        if (slot == T(0)) out.c_.erase(k);
      }
    return out;
  }
  friend bool operator==(const Poly2& a, const Poly2& b) { return a.c_ == b.c_; }

  Poly2 pow(int e) const {
    Poly2 out = constant(T(1));
    for (int i = 0; i < e; ++i) out = out * *this;
    return out;
  }

  Poly2 dx() const {
    Poly2 out;
    for (const auto& [k, v] : c_)
      if (k.first > 0) out += monomial(v * T(k.first), k.first - 1, k.second);
    return out;
  }
  Poly2 dy() const {
    Poly2 out;
    for (const auto& [k, v] : c_)
      if (k.second > 0) out += monomial(v * T(k.second), k.first, k.second - 1);
    return out;
  }

  /// p(X(u,v), Y(u,v)) for bivariate substitutions X, Y.
  Poly2 substitute(const Poly2& X, const Poly2& Y) const {
    Poly2 out;
    std::map<int, Poly2> xp, yp;
    auto power = [](std::map<int, Poly2>& cache, const Poly2& base, int e) -> const Poly2& {
      auto it = cache.find(e);
      if (it != cache.end()) return it->second;
      return cache.emplace(e, base.pow(e)).first->second;
    };
    for (const auto& [k, v] : c_) out += power(xp, X, k.first) * power(yp, Y, k.second) * v;
    return out;
  }

  /// Restriction along the segment P + s*(Q - P), as a polynomial in s.
  Poly<T> along(const T& px, const T& py, const T& dx_, const T& dy_) const {
    Poly<T> out;
    Poly<T> X({px, dx_}), Y({py, dy_});
    for (const auto& [k, v] : c_) {
      Poly<T> term = Poly<T>::constant(v);
      for (int i = 0; i < k.first; ++i) term = term * X;
      for (int j = 0; j < k.second; ++j) term = term * Y;
      out += term;
    }
    return out;
  }

  /// Fix x = xv, leaving a polynomial in y.
  Poly<T> at_x(const T& xv) const {
    std::vector<T> c(std::max(degree_y() + 1, 0), T(0));
    for (const auto& [k, v] : c_) c[k.second] += v * ipow(xv, k.first);
    return Poly<T>(std::move(c));
  }
  /// Fix y = yv, leaving a polynomial in x.
  Poly<T> at_y(const T& yv) const {
    std::vector<T> c(std::max(degree_x() + 1, 0), T(0));
    for (const auto& [k, v] : c_) c[k.first] += v * ipow(yv, k.second);
    return Poly<T>(std::move(c));
  }

  /// Coefficients in y as univariate polynomials in x: p = sum_j P_j(x) y^j.
  std::vector<Poly<T>> coefficients_in_y() const {
    std::vector<std::vector<T>> rows(std::max(degree_y() + 1, 0));
    for (auto& r : rows) r.assign(std::max(degree_x() + 1, 0), T(0));
    for (const auto& [k, v] : c_) rows[k.second][k.first] = v;
    std::vector<Poly<T>> out;
    for (auto& r : rows) out.emplace_back(std::move(r));
    return out;
  }

 private:
  std::map<Key, T> c_;

  template <class U>
  static U from(const T& v) {
    if constexpr (std::is_same_v<U, T>) return v;
    else if constexpr (std::is_same_v<T, Rational>) return from_rational<U>(v);
    else return static_cast<U>(v);
  }
  template <class U>
  static U ipow(const U& b, int e) {
    U r(1);
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  }
};

using Poly2Q = Poly2<Rational>;

}  // namespace kstab
