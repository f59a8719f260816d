#pragma once

#include <vector>

#include "kstab/core/poly2.hpp"
#include "kstab/geometry/polygon.hpp"

namespace kstab {

inline constexpr int max_weight_degree = 4;

inline Poly2Q affine_poly(const Affine& h) { return Poly2Q::affine(h.a, h.b, h.c); }

inline void check_weight_degree(const Poly2Q& w) {
  if (w.total_degree() > max_weight_degree)
    throw Error(ErrorCode::unsupported_degree,
                "weight degree " + std::to_string(w.total_degree()) + " exceeds the exact bound " +
                    std::to_string(max_weight_degree));
}

namespace detail {

inline Rational factorial(int n) {
  Rational r(1);
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

/// Integral of u^i v^j over the standard simplex u, v >= 0, u + v <= 1.
inline Rational simplex_moment(int i, int j) { return factorial(i) * factorial(j) / factorial(i + j + 2); }

}  // namespace detail

/// Exact integral of g over the triangle (a, b, c) with respect to Lebesgue measure.
inline Rational integrate_triangle(const Poly2Q& g, const Vec2& a, const Vec2& b, const Vec2& c) {
  Rational jac = orient(a, b, c);
  if (jac == 0 || g.is_zero()) return Rational(0);
  if (jac < 0) jac = -jac;
  Poly2Q X = Poly2Q::affine(a.x, b.x - a.x, c.x - a.x);
  Poly2Q Y = Poly2Q::affine(a.y, b.y - a.y, c.y - a.y);
  Poly2Q h = g.substitute(X, Y);
  Rational s(0);
  for (const auto& [k, v] : h.terms()) s += v * detail::simplex_moment(k.first, k.second);
  return jac * s;
}

/// Exact integral over a convex polygon (fan from the first vertex).
inline Rational integrate_convex(const Poly2Q& g, const std::vector<Vec2>& v) {
  Rational s(0);
  for (size_t i = 1; i + 1 < v.size(); ++i) s += integrate_triangle(g, v[0], v[i], v[i + 1]);
  return s;
}

/// Mean of g along the segment p -> q: integral over s in [0, 1] of g(p + s (q - p)).
inline Rational segment_mean(const Poly2Q& g, const Vec2& p, const Vec2& q) {
  Vec2 d = q - p;
  return g.along(p.x, p.y, d.x, d.y).integrate(Rational(0), Rational(1));
}

/// Lattice length of a rational segment, i.e. its dsigma-measure with unit weight.
inline Rational lattice_length(const Vec2& p, const Vec2& q) {
  if (p == q) return Rational(0);
  return primitive_direction(q - p).second;
}

inline Rational integrate_interior(const RationalPolygon& P, const Poly2Q& g) { return integrate_convex(g, P.vertices()); }

/// Weighted dsigma integral of g over the boundary.
inline Rational integrate_boundary(const RationalPolygon& P, const Poly2Q& g) {
  Rational s(0);
  for (const auto& e : P.edges()) {
    if (e.weight == 0) continue;
    s += e.weight * e.lattice_length * segment_mean(g, e.start, e.end);
  }
  return s;
}

/// Moments int 1, x, y, x^2, xy, y^2 over P.
struct Moments {
  Rational m00, m10, m01, m20, m11, m02;
};

inline Moments moments(const RationalPolygon& P) {
  auto I = [&](int i, int j) { return integrate_interior(P, Poly2Q::monomial(Rational(1), i, j)); };
  return {I(0, 0), I(1, 0), I(0, 1), I(2, 0), I(1, 1), I(0, 2)};
}

/// Convex piecewise-affine function max_k l_k, integrated exactly by splitting P into the regions where each piece wins.
class MaxAffine {
 public:
  MaxAffine() = default;
  explicit MaxAffine(std::vector<Affine> pieces) {
    for (auto& p : pieces) {
      bool dup = false;
      for (const auto& q : pieces_)
        if (q.a == p.a && q.b == p.b && q.c == p.c) dup = true;
      if (!dup) pieces_.push_back(p);
    }
  }
  /// max(l, 0)
  static MaxAffine simple(const Affine& l) { return MaxAffine({l, Affine{Rational(0), Rational(0), Rational(0)}}); }

  const std::vector<Affine>& pieces() const { return pieces_; }

  Rational operator()(const Vec2& p) const {
    Rational m = pieces_.at(0)(p);
    for (const auto& l : pieces_) m = std::max(m, l(p));
    return m;
  }

  /// Region of P where piece k is maximal.
  TaggedPolygon region(const RationalPolygon& P, size_t k) const {
    TaggedPolygon r = TaggedPolygon::from(P);
    for (size_t j = 0; j < pieces_.size() && !r.empty(); ++j) {
      if (j == k) continue;
      r = clip(r, pieces_[k] - pieces_[j]);
    }
    return r;
  }

  /// int f^power * w dmu over P (power 1 or 2).
  Rational integrate_interior(const RationalPolygon& P, const Poly2Q& w, int power = 1) const {
    Rational s(0);
    for (size_t k = 0; k < pieces_.size(); ++k) {
      TaggedPolygon r = region(P, k);
      if (r.empty()) continue;
      Poly2Q g = affine_poly(pieces_[k]).pow(power) * w;
      s += integrate_convex(g, r.vertices);
    }
    return s;
  }

  /// Weighted int f * w dsigma over the boundary of P.
  Rational integrate_boundary(const RationalPolygon& P, const Poly2Q& w) const {
    Rational s(0);
    for (const auto& e : P.edges()) {
      if (e.weight == 0) continue;
      for (size_t k = 0; k < pieces_.size(); ++k) {
        Rational lo(0), hi(1);
        Vec2 d = e.end - e.start;
        for (size_t j = 0; j < pieces_.size() && lo < hi; ++j) {
          if (j == k) continue;
          Affine diff = pieces_[k] - pieces_[j];
          Rational f0 = diff(e.start), slope = diff.b * d.x + diff.c * d.y;  // f0 + slope * s >= 0
          if (slope == 0) {
            // an edge along which two pieces tie goes to the lower index only
            if (f0 < 0 || (f0 == 0 && j < k)) hi = lo;
          } else if (slope > 0) {
            lo = std::max(lo, Rational(-f0 / slope));
          } else {
            hi = std::min(hi, Rational(-f0 / slope));
          }
        }
        if (!(lo < hi)) continue;
        Vec2 p = e.start + lo * d, q = e.start + hi * d;
        s += e.weight * (hi - lo) * e.lattice_length * segment_mean(affine_poly(pieces_[k]) * w, p, q);
      }
    }
    return s;
  }

 private:
  std::vector<Affine> pieces_;
};

}  // namespace kstab
