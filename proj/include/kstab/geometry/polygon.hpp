#pragma once

#include <array>
#include <string>
#include <vector>

#include "kstab/core/numeric.hpp"

namespace kstab {

struct Vec2 {
  Rational x, y;
  friend Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(const Rational& s, const Vec2& a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(const Vec2& a, const Vec2& b) { return !(a == b); }
  friend bool operator<(const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }
};

inline Rational cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline Rational dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline Rational orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

/// Affine function a + b x + c y.
struct Affine {
  Rational a, b, c;
  Rational operator()(const Vec2& p) const { return a + b * p.x + c * p.y; }
  friend Affine operator+(const Affine& u, const Affine& v) { return {u.a + v.a, u.b + v.b, u.c + v.c}; }
  friend Affine operator-(const Affine& u, const Affine& v) { return {u.a - v.a, u.b - v.b, u.c - v.c}; }
  friend Affine operator*(const Rational& s, const Affine& u) { return {s * u.a, s * u.b, s * u.c}; }
  bool is_constant() const { return b == 0 && c == 0; }
};

struct IntVec2 {
  Integer x, y;
};

/// Primitive integer vector along a nonzero rational direction, and t with d = t * primitive.
inline std::pair<IntVec2, Rational> primitive_direction(const Vec2& d) {
  Integer l = bmp::lcm(denom(d.x), denom(d.y));
  Integer a = numer(d.x * Rational(l)), b = numer(d.y * Rational(l));
  Integer g = bmp::gcd(a, b);
  if (g < 0) g = -g;
  if (g == 0) throw DomainError("zero direction");
  IntVec2 prim{a / g, b / g};
  Rational t = Rational(g) / Rational(l);
  return {prim, t};
}

struct PolygonEdge {
  Vec2 start, end;
  IntVec2 normal;           // primitive outward normal
  Rational lattice_length;  // integral of 1 dsigma before weighting
  Rational density_sq;      // (dsigma / Euclidean length)^2 = 1 / |normal|^2
  Rational weight;          // multiplier on dsigma; 0 on interior cuts
};

class RationalPolygon {
 public:
  RationalPolygon() = default;
  explicit RationalPolygon(std::vector<Vec2> vertices, std::vector<Rational> weights = {})
      : v_(std::move(vertices)), w_(std::move(weights)) {
    if (w_.empty()) w_.assign(v_.size(), Rational(1));
    validate();
    build_edges();
  }

  const std::vector<Vec2>& vertices() const { return v_; }
  const std::vector<PolygonEdge>& edges() const { return e_; }
  size_t size() const { return v_.size(); }
  const std::vector<Rational>& weights() const { return w_; }

  Rational area() const {
    Rational s(0);
    for (size_t i = 0; i < v_.size(); ++i) s += cross(v_[i], v_[(i + 1) % v_.size()]);
    return s / 2;
  }

  /// Weighted boundary measure: sum of weight * lattice length.
  Rational boundary_measure() const {
    Rational s(0);
    for (const auto& e : e_) s += e.weight * e.lattice_length;
    return s;
  }

  bool is_lattice() const {
    for (const auto& p : v_)
      if (!is_integer(p.x) || !is_integer(p.y)) return false;
    return true;
  }

  Vec2 vertex_centroid() const {
    Vec2 c{Rational(0), Rational(0)};
    for (const auto& p : v_) c = c + p;
    return Rational(1, v_.size()) * c;
  }

  /// Area centroid.
  Vec2 barycenter() const {
    Rational cx(0), cy(0), a(0);
    for (size_t i = 0; i < v_.size(); ++i) {
      const Vec2& p = v_[i];
      const Vec2& q = v_[(i + 1) % v_.size()];
      Rational cr = cross(p, q);
      a += cr;
      cx += (p.x + q.x) * cr;
      cy += (p.y + q.y) * cr;
    }
    return {cx / (3 * a), cy / (3 * a)};
  }

  /// Strict interior test.
  bool contains_strictly(const Vec2& p) const {
    for (size_t i = 0; i < v_.size(); ++i)
      if (orient(v_[i], v_[(i + 1) % v_.size()], p) <= 0) return false;
    return true;
  }
  bool contains(const Vec2& p) const {
    for (size_t i = 0; i < v_.size(); ++i)
      if (orient(v_[i], v_[(i + 1) % v_.size()], p) < 0) return false;
    return true;
  }

  RationalPolygon with_weights(std::vector<Rational> w) const { return RationalPolygon(v_, std::move(w)); }

 private:
  std::vector<Vec2> v_;
  std::vector<Rational> w_;
  std::vector<PolygonEdge> e_;

  void validate() const {
    if (v_.size() < 3) throw Error(ErrorCode::validation, "polygon needs at least 3 vertices");
    if (w_.size() != v_.size()) throw Error(ErrorCode::validation, "edge weight count must match vertex count");
    for (const auto& w : w_)
      if (w < 0) throw Error(ErrorCode::validation, "edge weights must be nonnegative");
    int pos = 0, neg = 0;
    size_t n = v_.size();
    for (size_t i = 0; i < n; ++i) {
      Rational o = orient(v_[i], v_[(i + 1) % n], v_[(i + 2) % n]);
      if (o > 0) ++pos;
      else if (o < 0) ++neg;
      else throw Error(ErrorCode::validation, "degenerate polygon: three collinear consecutive vertices");
    }
    if (neg == static_cast<int>(n)) throw Error(ErrorCode::clockwise, "polygon vertices are clockwise");
    if (neg > 0) throw Error(ErrorCode::validation, "polygon is not convex");
    // all left turns plus a positive fan from v0 rules out star-shaped windings
    for (size_t i = 1; i + 1 < n; ++i)
      if (orient(v_[0], v_[i], v_[i + 1]) <= 0) throw Error(ErrorCode::validation, "polygon is not simple");
  }

  void build_edges() {
    size_t n = v_.size();
    e_.clear();
    for (size_t i = 0; i < n; ++i) {
      const Vec2& p = v_[i];
      const Vec2& q = v_[(i + 1) % n];
      auto [prim, t] = primitive_direction(q - p);
      PolygonEdge e;
      e.start = p;
      e.end = q;
      e.normal = {prim.y, -prim.x};  // rotate clockwise: outward for CCW order
      e.lattice_length = t;
      e.density_sq = Rational(1) / Rational(Integer(prim.x * prim.x + prim.y * prim.y));
      e.weight = w_[i];
      e_.push_back(e);
    }
  }
};

/// Polygon given as vertex list with the weight of the edge leaving each vertex.
struct TaggedPolygon {
  std::vector<Vec2> vertices;
  std::vector<Rational> weights;

  static TaggedPolygon from(const RationalPolygon& p) { return {p.vertices(), p.weights()}; }
  bool empty() const { return vertices.size() < 3; }
  RationalPolygon polygon() const { return RationalPolygon(vertices, weights); }
};

/// Keeps the part of a convex polygon where h >= 0; new cut edges get weight `cut_weight`.
inline TaggedPolygon clip(const TaggedPolygon& poly, const Affine& h, const Rational& cut_weight = Rational(0)) {
  TaggedPolygon out;
  size_t n = poly.vertices.size();
  auto emit = [&](const Vec2& p, const Rational& w) {
    if (!out.vertices.empty() && out.vertices.back() == p) {
      out.weights.back() = w;
      return;
    }
    out.vertices.push_back(p);
    out.weights.push_back(w);
  };
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly.vertices[i];
    const Vec2& q = poly.vertices[(i + 1) % n];
    const Rational& w = poly.weights[i];
    Rational fp = h(p), fq = h(q);
    if (fp >= 0) emit(p, w);
    if ((fp > 0 && fq < 0) || (fp < 0 && fq > 0)) {
      Rational t = fp / (fp - fq);
      Vec2 r = p + t * (q - p);
      emit(r, fp > 0 ? cut_weight : w);
    } else if (fp == 0 && fq < 0) {
      out.weights.back() = cut_weight;
    }
  }
  while (out.vertices.size() > 1 && out.vertices.front() == out.vertices.back()) {
    out.vertices.pop_back();
    out.weights.pop_back();
  }
  // drop collinear middle vertices (edges on a common line carry the same weight)
  bool changed = true;
  while (changed && out.vertices.size() >= 3) {
    changed = false;
    size_t m = out.vertices.size();
    for (size_t i = 0; i < m; ++i) {
      size_t prev = (i + m - 1) % m, next = (i + 1) % m;
      if (orient(out.vertices[prev], out.vertices[i], out.vertices[next]) == 0) {
        out.vertices.erase(out.vertices.begin() + i);
        out.weights.erase(out.weights.begin() + i);
        changed = true;
        break;
      }
    }
  }
  if (out.vertices.size() < 3) return {};
  return out;
}

inline Rational area_of(const std::vector<Vec2>& v) {
  Rational s(0);
  for (size_t i = 0; i < v.size(); ++i) s += cross(v[i], v[(i + 1) % v.size()]);
  return s / 2;
}

}  // namespace kstab
