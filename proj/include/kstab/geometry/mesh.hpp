#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "kstab/geometry/integrate.hpp"

namespace kstab {

/// Triangulated grid at scale 1/N: the fan of P from its first vertex, each fan triangle
/// subdivided regularly into N^2 similar triangles. Level 2N refines level N.
class GridMesh {
 public:
  struct Triangle {
    std::array<size_t, 3> v;  // counterclockwise
  };
  struct InteriorEdge {
    size_t a, b;        // shared edge
    size_t left, right; // opposite nodes in the two triangles
    // convexity across the edge: f(right) - la f(a) - lb f(b) - lc f(left) >= 0
    Rational la, lb, lc;
  };
  struct BoundarySegment {
    size_t a, b;
    size_t polygon_edge;
    Rational lattice_length;
  };

  GridMesh(const RationalPolygon& P, int N) : P_(P), N_(N) {
    if (N < 1) throw Error(ErrorCode::resolution, "grid resolution must be positive");
    build();
  }

  const RationalPolygon& polygon() const { return P_; }
  int resolution() const { return N_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return tris_; }
  const std::vector<InteriorEdge>& interior_edges() const { return interior_; }
  const std::vector<BoundarySegment>& boundary_segments() const { return boundary_; }

  std::optional<size_t> find_node(const Vec2& p) const {
    auto it = index_.find(p);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Grid node nearest the area barycenter (ties broken by lowest index).
  size_t node_nearest_barycenter() const { return nearest_node(P_.barycenter()); }

  size_t nearest_node(const Vec2& target) const {
    size_t best = 0;
    Rational bd(-1);
    for (size_t i = 0; i < nodes_.size(); ++i) {
      Vec2 d = nodes_[i] - target;
      Rational dist = dot(d, d);
      if (bd < 0 || dist < bd) {
        bd = dist;
        best = i;
      }
    }
    return best;
  }

  /// Affine function on triangle t taking values fa, fb, fc at its vertices.
  Affine interpolant(size_t t, const Rational& fa, const Rational& fb, const Rational& fc) const {
    const auto& T = tris_[t];
    const Vec2 &A = nodes_[T.v[0]], &B = nodes_[T.v[1]], &C = nodes_[T.v[2]];
    Rational det = orient(A, B, C);
    // gradient from the two edge differences
    Vec2 u = B - A, w = C - A;
    Rational du = fb - fa, dw = fc - fa;
    Rational gx = (du * w.y - dw * u.y) / det;
    Rational gy = (dw * u.x - du * w.x) / det;
    return {fa - gx * A.x - gy * A.y, gx, gy};
  }

  /// Index of a triangle containing p (closed), if any.
  std::optional<size_t> locate(const Vec2& p) const {
    for (size_t t = 0; t < tris_.size(); ++t) {
      const auto& T = tris_[t];
      const Vec2 &A = nodes_[T.v[0]], &B = nodes_[T.v[1]], &C = nodes_[T.v[2]];
      if (orient(A, B, p) >= 0 && orient(B, C, p) >= 0 && orient(C, A, p) >= 0) return t;
    }
    return std::nullopt;
  }

 private:
  RationalPolygon P_;
  int N_;
  std::vector<Vec2> nodes_;
  std::map<Vec2, size_t> index_;
  std::vector<Triangle> tris_;
  std::vector<InteriorEdge> interior_;
  std::vector<BoundarySegment> boundary_;

  size_t node(const Vec2& p) {
    auto [it, inserted] = index_.emplace(p, nodes_.size());
    if (inserted) nodes_.push_back(p);
    return it->second;
  }

  void build() {
    const auto& V = P_.vertices();
    Rational invN = Rational(1) / Rational(N_);
    for (size_t f = 1; f + 1 < V.size(); ++f) {
      Vec2 o = V[0], e1 = V[f] - V[0], e2 = V[f + 1] - V[0];
      auto at = [&](int a, int b) { return node(o + (Rational(a) * invN) * e1 + (Rational(b) * invN) * e2); };
      for (int a = 0; a < N_; ++a)
        for (int b = 0; a + b < N_; ++b) {
          tris_.push_back({{at(a, b), at(a + 1, b), at(a, b + 1)}});
          if (a + b + 2 <= N_) tris_.push_back({{at(a + 1, b), at(a + 1, b + 1), at(a, b + 1)}});
        }
    }
    std::map<std::pair<size_t, size_t>, std::vector<std::pair<size_t, size_t>>> edge_tris;
    for (size_t t = 0; t < tris_.size(); ++t) {
      const auto& T = tris_[t];
      for (int k = 0; k < 3; ++k) {
        size_t a = T.v[k], b = T.v[(k + 1) % 3], c = T.v[(k + 2) % 3];
        edge_tris[{std::min(a, b), std::max(a, b)}].push_back({t, c});
      }
    }
    for (const auto& [key, list] : edge_tris) {
      auto [a, b] = key;
      if (list.size() == 2) {
        size_t c = list[0].second, d = list[1].second;
        // barycentric coordinates of d with respect to (a, b, c)
        const Vec2 &A = nodes_[a], &B = nodes_[b], &C = nodes_[c], &D = nodes_[d];
        Rational det = orient(A, B, C);
        Rational lc = orient(A, B, D) / det;
        Rational la = orient(B, C, D) / det;
        Rational lb = orient(C, A, D) / det;
        interior_.push_back({a, b, c, d, la, lb, lc});
      } else if (list.size() == 1) {
        size_t t = list[0].first;
        const auto& T = tris_[t];
        // keep the triangle's orientation so segments run counterclockwise along the boundary
        size_t s = a, e = b;
        for (int k = 0; k < 3; ++k)
          if ((T.v[k] == a && T.v[(k + 1) % 3] == b) || (T.v[k] == b && T.v[(k + 1) % 3] == a)) {
            s = T.v[k];
            e = T.v[(k + 1) % 3];
          }
        boundary_.push_back({s, e, owning_edge(nodes_[s], nodes_[e]), lattice_length(nodes_[s], nodes_[e])});
      } else {
        throw Error(ErrorCode::internal, "non-manifold grid edge");
      }
    }
  }

  size_t owning_edge(const Vec2& p, const Vec2& q) const {
    const auto& E = P_.edges();
    for (size_t i = 0; i < E.size(); ++i)
      if (orient(E[i].start, E[i].end, p) == 0 && orient(E[i].start, E[i].end, q) == 0) return i;
    throw Error(ErrorCode::internal, "boundary grid segment off the polygon boundary");
  }
};

/// Piecewise-linear function given by its values on the nodes of a GridMesh.
class PLFunction {
 public:
  PLFunction(std::shared_ptr<const GridMesh> mesh, std::vector<Rational> values)
      : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (values_.size() != mesh_->nodes().size()) throw DomainError("PLFunction value count does not match the grid");
  }

  template <class F>
  static PLFunction sample(std::shared_ptr<const GridMesh> mesh, F&& f) {
    std::vector<Rational> vals;
    vals.reserve(mesh->nodes().size());
    for (const auto& p : mesh->nodes()) vals.push_back(f(p));
    return PLFunction(std::move(mesh), std::move(vals));
  }

  const GridMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const GridMesh> mesh_ptr() const { return mesh_; }
  int resolution() const { return mesh_->resolution(); }
  const std::vector<Rational>& values() const { return values_; }

  /// Per-edge convexity jumps; the function is convex iff all are >= 0.
  std::vector<Rational> convexity_jumps() const {
    std::vector<Rational> out;
    for (const auto& e : mesh_->interior_edges())
      out.push_back(values_[e.right] - e.la * values_[e.a] - e.lb * values_[e.b] - e.lc * values_[e.left]);
    return out;
  }

  bool is_convex() const {
    if (!convex_) {
      bool ok = true;
      for (const auto& j : convexity_jumps())
        if (j < 0) ok = false;
      convex_ = ok;
    }
    return *convex_;
  }

  Affine piece(size_t t) const {
    const auto& T = mesh_->triangles()[t];
    return mesh_->interpolant(t, values_[T.v[0]], values_[T.v[1]], values_[T.v[2]]);
  }

  Rational operator()(const Vec2& p) const {
    auto t = mesh_->locate(p);
    if (!t) throw DomainError("point outside the polygon");
    return piece(*t)(p);
  }

  /// Same function on the level-2N grid.
  PLFunction refined() const {
    auto fine = std::make_shared<GridMesh>(mesh_->polygon(), 2 * mesh_->resolution());
    return sample(fine, [&](const Vec2& p) { return (*this)(p); });
  }

  friend PLFunction operator+(const PLFunction& f, const PLFunction& g) {
    std::vector<Rational> v(f.values_.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = f.values_[i] + g.values_[i];
    return PLFunction(f.mesh_, std::move(v));
  }
  friend PLFunction operator*(const Rational& s, const PLFunction& f) {
    std::vector<Rational> v(f.values_);
    for (auto& x : v) x *= s;
    return PLFunction(f.mesh_, std::move(v));
  }

 private:
  std::shared_ptr<const GridMesh> mesh_;
  std::vector<Rational> values_;
  mutable std::optional<bool> convex_;
};

enum class Region { interior, boundary };

/// Exact integral of f * weight over the interior (dmu) or boundary (weighted dsigma).
inline Rational integrate(const PLFunction& f, Region region, const Poly2Q& weight = Poly2Q::constant(Rational(1))) {
  check_weight_degree(weight);
  const GridMesh& M = f.mesh();
  Rational s(0);
  if (region == Region::interior) {
    for (size_t t = 0; t < M.triangles().size(); ++t) {
      const auto& T = M.triangles()[t];
      s += integrate_triangle(affine_poly(f.piece(t)) * weight, M.nodes()[T.v[0]], M.nodes()[T.v[1]], M.nodes()[T.v[2]]);
    }
  } else {
    const auto& E = M.polygon().edges();
    for (const auto& seg : M.boundary_segments()) {
      const Rational& w = E[seg.polygon_edge].weight;
      if (w == 0) continue;
      const Vec2 &p = M.nodes()[seg.a], &q = M.nodes()[seg.b];
      Rational fa = f.values()[seg.a], fb = f.values()[seg.b];
      // f restricted to the segment is fa + (fb - fa) s
      Poly<Rational> fs({fa, fb - fa});
      Vec2 d = q - p;
      Poly<Rational> ws = weight.along(p.x, p.y, d.x, d.y);
      s += w * seg.lattice_length * (fs * ws).integrate(Rational(0), Rational(1));
    }
  }
  return s;
}

/// Exact integral of f^2 * weight over the interior.
inline Rational integrate_square(const PLFunction& f, const Poly2Q& weight = Poly2Q::constant(Rational(1))) {
  const GridMesh& M = f.mesh();
  Rational s(0);
  for (size_t t = 0; t < M.triangles().size(); ++t) {
    const auto& T = M.triangles()[t];
    s += integrate_triangle(affine_poly(f.piece(t)).pow(2) * weight, M.nodes()[T.v[0]], M.nodes()[T.v[1]],
                            M.nodes()[T.v[2]]);
  }
  return s;
}

}  // namespace kstab
