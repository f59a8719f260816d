#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kstab/core/linalg.hpp"
#include "kstab/core/lp.hpp"
#include "kstab/geometry/mesh.hpp"

namespace kstab {

/// Density A = c0 + cx x + cy y of the relative functional.
struct ExtremalAffine {
  Rational c0, cx, cy;

  Affine affine() const { return {c0, cx, cy}; }
  Poly2Q poly() const { return Poly2Q::affine(c0, cx, cy); }
  Rational operator()(const Vec2& p) const { return c0 + cx * p.x + cy * p.y; }
  bool is_constant() const { return cx == 0 && cy == 0; }
};

/// Constant density a = |boundary|_sigma / |P|.
inline ExtremalAffine average_density(const RationalPolygon& P) {
  return {P.boundary_measure() / P.area(), Rational(0), Rational(0)};
}

namespace detail {

/// Gram matrix of {1, x, y} in L2(P).
inline MatQ affine_gram(const RationalPolygon& P) {
  Moments m = moments(P);
  return {{m.m00, m.m10, m.m01}, {m.m10, m.m20, m.m11}, {m.m01, m.m11, m.m02}};
}

}  // namespace detail

/// The affine A with int_boundary H dsigma = int_P A H dmu for H in {1, x, y}.
inline ExtremalAffine extremal_affine(const RationalPolygon& P) {
  VecQ rhs{integrate_boundary(P, Poly2Q::constant(Rational(1))), integrate_boundary(P, Poly2Q::x()),
           integrate_boundary(P, Poly2Q::y())};
  auto sol = solve(detail::affine_gram(P), rhs);
  if (!sol) throw Error(ErrorCode::internal, "singular moment matrix for a nondegenerate polygon");
  return {(*sol)[0], (*sol)[1], (*sol)[2]};
}

inline const ExtremalAffine& density_or_average(const std::optional<ExtremalAffine>& A, const RationalPolygon& P,
                                                std::optional<ExtremalAffine>& slot) {
  if (A) return *A;
  slot = average_density(P);
  return *slot;
}

// ---- the functional ----

inline Rational donaldson_functional(const PLFunction& f, const std::optional<ExtremalAffine>& A = std::nullopt) {
  std::optional<ExtremalAffine> slot;
  const auto& D = density_or_average(A, f.mesh().polygon(), slot);
  return integrate(f, Region::boundary) - integrate(f, Region::interior, D.poly());
}

inline Rational donaldson_functional(const RationalPolygon& P, const MaxAffine& f,
                                     const std::optional<ExtremalAffine>& A = std::nullopt) {
  std::optional<ExtremalAffine> slot;
  const auto& D = density_or_average(A, P, slot);
  return f.integrate_boundary(P, Poly2Q::constant(Rational(1))) - f.integrate_interior(P, D.poly());
}

inline Rational donaldson_functional(const RationalPolygon& P, const Affine& h,
                                     const std::optional<ExtremalAffine>& A = std::nullopt) {
  std::optional<ExtremalAffine> slot;
  const auto& D = density_or_average(A, P, slot);
  return integrate_boundary(P, affine_poly(h)) - integrate_interior(P, affine_poly(h) * D.poly());
}

// ---- simple piecewise-linear functions ----

/// max(l, 0) with l vanishing on the chord p -> q and positive to its left.
struct SimplePL {
  Vec2 p, q;

  /// l(x) = cross(q - p, x - p); integer-primitive gradient when the chord is rational.
  Affine lattice_form() const {
    Vec2 d = q - p;
    auto [prim, t] = primitive_direction(d);
    Rational gx = Rational(-prim.y), gy = Rational(prim.x);
    return {-(gx * p.x + gy * p.y), gx, gy};
  }
  /// Same function with unit Euclidean gradient, in double.
  std::array<double, 3> unit_form() const {
    Affine l = lattice_form();
    double n = std::hypot(to_double(l.b), to_double(l.c));
    return {to_double(l.a) / n, to_double(l.b) / n, to_double(l.c) / n};
  }
  MaxAffine function() const { return MaxAffine::simple(lattice_form()); }
  SimplePL flipped() const { return {q, p}; }

  bool meets_interior(const RationalPolygon& P) const { return p != q && P.contains_strictly(Rational(1, 2) * (p + q)); }

  friend bool same_chord(const SimplePL& a, const SimplePL& b) {
    return (a.p == b.p && a.q == b.q) || (a.p == b.q && a.q == b.p);
  }
};

// ---- LP over the grid cone ----

struct ConeMinimum {
  Rational value;
  PLFunction witness;
  size_t anchor;
  size_t pivots;
  int resolution;
  bool relative;

  bool certified_nonnegative() const { return value >= 0; }
};

namespace detail {

/// Coefficients b_i with int_boundary f dsigma = sum b_i f_i.
inline VecQ boundary_form(const GridMesh& M) {
  VecQ b(M.nodes().size(), Rational(0));
  const auto& E = M.polygon().edges();
  for (const auto& seg : M.boundary_segments()) {
    Rational half = E[seg.polygon_edge].weight * seg.lattice_length / 2;
    b[seg.a] += half;
    b[seg.b] += half;
  }
  return b;
}

/// Coefficients with int_P D f dmu = sum d_i f_i for affine D.
inline VecQ density_form(const GridMesh& M, const ExtremalAffine& D) {
  VecQ d(M.nodes().size(), Rational(0));
  for (const auto& T : M.triangles()) {
    const Vec2 &a = M.nodes()[T.v[0]], &b = M.nodes()[T.v[1]], &c = M.nodes()[T.v[2]];
    Rational area = abs(orient(a, b, c)) / 2;
    Rational Da = D(a), Db = D(b), Dc = D(c), sum = Da + Db + Dc;
    // int lambda_k lambda_m = |T| (1 + delta_km) / 12
    d[T.v[0]] += area * (sum + Da) / 12;
    d[T.v[1]] += area * (sum + Db) / 12;
    d[T.v[2]] += area * (sum + Dc) / 12;
  }
  return d;
}

}  // namespace detail

/// Linear form of the functional on grid values.
inline VecQ functional_form(const GridMesh& M, const std::optional<ExtremalAffine>& A = std::nullopt) {
  std::optional<ExtremalAffine> slot;
  const auto& D = density_or_average(A, M.polygon(), slot);
  VecQ b = detail::boundary_form(M), d = detail::density_form(M, D);
  return sub(b, d);
}

/// Minimizes the functional over convex grid functions with f >= 0, f(anchor) = 0 and unit boundary integral.
inline ConeMinimum minimize_convex_cone(std::shared_ptr<const GridMesh> mesh,
                                       const std::optional<ExtremalAffine>& A = std::nullopt,
                                       std::optional<size_t> anchor = std::nullopt) {
  const GridMesh& M = *mesh;
  const size_t n = M.nodes().size();
  size_t v0 = anchor ? *anchor : M.node_nearest_barycenter();
  if (v0 >= n) throw DomainError("anchor node out of range");
  lp::Problem prob;
  prob.num_vars = n;
  prob.objective = functional_form(M, A);
  for (const auto& e : M.interior_edges()) {
    // -(jump) <= 0 keeps the row slack-only
    VecQ row(n, Rational(0));
    row[e.right] -= 1;
    row[e.a] += e.la;
    row[e.b] += e.lb;
    row[e.left] += e.lc;
    prob.add(std::move(row), lp::Relation::le, Rational(0));
  }
  VecQ pin(n, Rational(0));
  pin[v0] = 1;
  prob.add(std::move(pin), lp::Relation::eq, Rational(0));
  VecQ b = detail::boundary_form(M);
  prob.add(b, lp::Relation::eq, Rational(1));
  auto sol = lp::solve(prob);
  if (sol.status == lp::Status::infeasible)
    throw Error(ErrorCode::resolution, "normalization infeasible on this grid (no boundary mass away from the anchor)");
  if (sol.status == lp::Status::unbounded)
    throw Error(ErrorCode::resolution, "normalized cone is unbounded on this grid");
  return {sol.value, PLFunction(mesh, sol.x), v0, sol.pivots, M.resolution(), A.has_value()};
}

inline ConeMinimum minimize_convex_cone(const RationalPolygon& P, int N,
                                       const std::optional<ExtremalAffine>& A = std::nullopt) {
  if (N < 2) throw Error(ErrorCode::resolution, "resolution must be at least 2");
  return minimize_convex_cone(std::make_shared<GridMesh>(P, N), A);
}

// ---- uniform ratio ----

/// L_A(f) together with the squared L2 norm of f minus its projection onto affine functions.
struct RatioValue {
  Rational functional;
  Rational pi_norm_sq;

  bool defined() const { return pi_norm_sq > 0; }
  double ratio() const { return to_double(functional) / std::sqrt(to_double(pi_norm_sq)); }
  /// Exact comparison of two ratios (both defined).
  friend bool same_ratio(const RatioValue& a, const RatioValue& b) {
    return sign(a.functional) == sign(b.functional) &&
           a.functional * a.functional * b.pi_norm_sq == b.functional * b.functional * a.pi_norm_sq;
  }
};

namespace detail {

inline Rational pi_norm_sq(const RationalPolygon& P, const VecQ& affine_moments, const Rational& square) {
  auto c = solve(affine_gram(P), affine_moments);
  if (!c) throw Error(ErrorCode::internal, "singular moment matrix");
  return square - dot(*c, affine_moments);
}

}  // namespace detail

inline RatioValue uniform_ratio(const RationalPolygon& P, const MaxAffine& f, const ExtremalAffine& A) {
  VecQ mom{f.integrate_interior(P, Poly2Q::constant(Rational(1))), f.integrate_interior(P, Poly2Q::x()),
           f.integrate_interior(P, Poly2Q::y())};
  Rational sq = f.integrate_interior(P, Poly2Q::constant(Rational(1)), 2);
  return {donaldson_functional(P, f, A), detail::pi_norm_sq(P, mom, sq)};
}

inline RatioValue uniform_ratio(const PLFunction& f, const ExtremalAffine& A) {
  const auto& P = f.mesh().polygon();
  VecQ mom{integrate(f, Region::interior), integrate(f, Region::interior, Poly2Q::x()),
           integrate(f, Region::interior, Poly2Q::y())};
  return {donaldson_functional(f, A), detail::pi_norm_sq(P, mom, integrate_square(f))};
}

/// Random point strictly inside P: positive integer barycentric weights up to `grain`.
inline Vec2 random_interior_point(const RationalPolygon& P, std::mt19937_64& rng, int grain) {
  std::uniform_int_distribution<int> w(1, grain);
  Vec2 s{Rational(0), Rational(0)};
  Rational total(0);
  for (const auto& v : P.vertices()) {
    Rational k(w(rng));
    s = s + k * v;
    total += k;
  }
  return (Rational(1) / total) * s;
}

/// max of `pieces` random affine functions, each vanishing at a random interior point, optionally with 0.
inline MaxAffine random_convex(const RationalPolygon& P, std::mt19937_64& rng, int pieces, int grain, bool with_zero) {
  std::uniform_int_distribution<int> g(-grain, grain);
  std::vector<Affine> ls;
  if (with_zero) ls.push_back({Rational(0), Rational(0), Rational(0)});
  while (static_cast<int>(ls.size()) < pieces + (with_zero ? 1 : 0)) {
    int dx = g(rng), dy = g(rng);
    if (dx == 0 && dy == 0) continue;
    Vec2 p = random_interior_point(P, rng, grain);
    Rational bx(dx), by(dy);
    ls.push_back({-(bx * p.x + by * p.y), bx, by});
  }
  return MaxAffine(std::move(ls));
}

struct UniformEstimate {
  double lambda_hat;     // min over everything tried; an upper bound for the true constant
  double lp_ratio;       // ratio of the LP minimizer
  double sampled_min;    // min over random samples (infinity when none were defined)
  size_t samples_used;   // random samples with nonzero projection
  Rational lp_value;     // certificate value of the LP at this resolution
  bool lp_certified;     // LP min >= 0
  std::string best_source;
};

inline UniformEstimate uniform_ratio_estimate(const RationalPolygon& P, int N, int samples, uint64_t seed) {
  ExtremalAffine A = extremal_affine(P);
  auto cone = minimize_convex_cone(P, N, A);
  UniformEstimate out{INFINITY, INFINITY, INFINITY, 0, cone.value, cone.certified_nonnegative(), ""};
  RatioValue lp = uniform_ratio(cone.witness, A);
  if (lp.defined()) {
    out.lp_ratio = lp.ratio();
    out.lambda_hat = out.lp_ratio;
    out.best_source = "lp-witness";
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> k(2, 4);
  for (int s = 0; s < samples; ++s) {
    MaxAffine f = random_convex(P, rng, k(rng), 2 * N, false);
    RatioValue r = uniform_ratio(P, f, A);
    if (!r.defined()) continue;
    ++out.samples_used;
    double v = r.ratio();
    out.sampled_min = std::min(out.sampled_min, v);
    if (v < out.lambda_hat) {
      out.lambda_hat = v;
      out.best_source = "sample-" + std::to_string(s);
    }
  }
  if (!std::isfinite(out.lambda_hat))
    throw Error(ErrorCode::sampling, "every candidate was affine on P; the ratio is undefined");
  return out;
}

// ---- boundary L2 constant ----

/// ||f||_{L2(P)} / int_boundary f dsigma, or nullopt when the boundary integral vanishes.
inline std::optional<double> l2_boundary_ratio(const RationalPolygon& P, const MaxAffine& f) {
  Rational bd = f.integrate_boundary(P, Poly2Q::constant(Rational(1)));
  if (bd <= 0) return std::nullopt;
  Rational sq = f.integrate_interior(P, Poly2Q::constant(Rational(1)), 2);
  return std::sqrt(to_double(sq)) / to_double(bd);
}

struct L2ConstantLevel {
  int grain;
  double level_max;
  double running_max;
  size_t evaluated;
};

struct L2ConstantCheck {
  std::vector<L2ConstantLevel> levels;
  double c_hat;
  /// last doubling moved the running max by at most 10%
  bool stabilized() const {
    if (levels.size() < 2) return false;
    return levels.back().running_max <= 1.1 * levels[levels.size() - 2].running_max;
  }
};

inline L2ConstantCheck boundary_l2_constant_check(const RationalPolygon& P, int samples, uint64_t seed, int num_levels = 4) {
  if (samples < 1) throw DomainError("samples must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> k(1, 3);
  L2ConstantCheck out{{}, 0.0};
  int grain = 2;
  for (int lv = 0; lv < num_levels; ++lv, grain *= 2) {
    L2ConstantLevel L{grain, 0.0, out.c_hat, 0};
    for (int s = 0; s < samples; ++s) {
      MaxAffine f = random_convex(P, rng, k(rng), grain, true);
      auto r = l2_boundary_ratio(P, f);
      if (!r) continue;
      ++L.evaluated;
      L.level_max = std::max(L.level_max, *r);
    }
    out.c_hat = std::max(out.c_hat, L.level_max);
    L.running_max = out.c_hat;
    out.levels.push_back(L);
  }
  return out;
}

// ---- zero creases ----

namespace detail {

struct SymPt {
  Poly2Q x, y;
};
inline SymPt sym(const Vec2& v) { return {Poly2Q::constant(v.x), Poly2Q::constant(v.y)}; }
inline SymPt operator-(const SymPt& a, const SymPt& b) { return {a.x - b.x, a.y - b.y}; }
inline Poly2Q cross(const SymPt& a, const SymPt& b) { return a.x * b.y - a.y * b.x; }
inline SymPt midpoint(const SymPt& a, const SymPt& b) {
  Rational h(1, 2);
  return {(a.x + b.x) * h, (a.y + b.y) * h};
}

/// Divides out (var - root) while it divides p; var 0 is s, var 1 is t.
inline Poly2Q divide_out(Poly2Q p, int var, const Rational& root, int* count = nullptr) {
  for (;;) {
    if (p.is_zero()) return p;
    // group by the other variable's exponent
    std::map<int, std::vector<Rational>> rows;
    int deg = var == 0 ? p.degree_x() : p.degree_y();
    for (const auto& [k, v] : p.terms()) {
      int mine = var == 0 ? k.first : k.second, other = var == 0 ? k.second : k.first;
      auto& r = rows[other];
      r.resize(deg + 1, Rational(0));
      r[mine] = v;
    }
    Poly2Q q;
    bool divides = true;
    for (auto& [other, coeffs] : rows) {
      auto [quot, rem] = Poly<Rational>::divmod(Poly<Rational>(coeffs), Poly<Rational>::linear_root(root));
      if (!rem.is_zero()) {
        divides = false;
        break;
      }
      for (int i = 0; i <= quot.degree(); ++i)
        q += var == 0 ? Poly2Q::monomial(quot.coeff(i), i, other) : Poly2Q::monomial(quot.coeff(i), other, i);
    }
    if (!divides) return p;
    p = q;
    if (count) ++*count;
  }
}

}  // namespace detail

/// Edge-pair parametrization: p(s) on edge i, q(t) on edge j.
inline Vec2 edge_point(const RationalPolygon& P, size_t e, const Rational& u) {
  const auto& E = P.edges()[e];
  return E.start + u * (E.end - E.start);
}

/// L_A(max(l_{s,t}, 0)) as an exact polynomial in (s, t) = (x, y) variables, where l_{s,t} vanishes on the chord
/// p(s) -> q(t) and is positive on the chain from q CCW to p. Valid on [0, 1]^2.
inline Poly2Q crease_polynomial(const RationalPolygon& P, const ExtremalAffine& A, size_t i, size_t j) {
  using namespace detail;
  const size_t n = P.size();
  if (i == j || i >= n || j >= n) throw DomainError("crease edges must be two distinct edges");
  const auto& V = P.vertices();
  const auto& E = P.edges();
  Vec2 di = E[i].end - E[i].start, dj = E[j].end - E[j].start;
  SymPt p{Poly2Q::affine(V[i].x, di.x, Rational(0)), Poly2Q::affine(V[i].y, di.y, Rational(0))};
  SymPt q{Poly2Q::affine(V[j].x, Rational(0), dj.x), Poly2Q::affine(V[j].y, Rational(0), dj.y)};
  SymPt dir = q - p;
  auto ell = [&](const SymPt& X) { return cross(dir, X - p); };
  auto dens = [&](const SymPt& X) { return Poly2Q::constant(A.c0) + X.x * A.cx + X.y * A.cy; };
  // region q, V[j+1], ..., V[i], p
  std::vector<SymPt> region{q};
  std::vector<size_t> chain;
  for (size_t k = (j + 1) % n;; k = (k + 1) % n) {
    chain.push_back(k);
    region.push_back(sym(V[k]));
    if (k == i) break;
  }
  region.push_back(p);
  Poly2Q interior;
  for (size_t k = 1; k + 1 < region.size(); ++k) {
    const SymPt &a = region[0], &b = region[k], &c = region[k + 1];
    Poly2Q area = cross(b - a, c - a) * Rational(1, 2);
    Poly2Q g;
    for (const SymPt& m : {midpoint(a, b), midpoint(b, c), midpoint(c, a)}) g += dens(m) * ell(m);
    interior += area * g * Rational(1, 3);
  }
  // boundary: q -> V[j+1] on edge j, full edges, V[i] -> p on edge i; l vanishes at p and q
  Poly2Q boundary;
  auto edge_mass = [&](size_t e) { return E[e].weight * E[e].lattice_length; };
  boundary += (Poly2Q::constant(Rational(1)) - Poly2Q::y()) * ell(sym(V[(j + 1) % n])) * (edge_mass(j) / 2);
  for (size_t k = (j + 1) % n; k != i; k = (k + 1) % n)
    boundary += (ell(sym(V[k])) + ell(sym(V[(k + 1) % n]))) * (edge_mass(k) / 2);
  boundary += Poly2Q::x() * ell(sym(V[i])) * (edge_mass(i) / 2);
  return boundary - interior;
}

struct CreaseFamily {
  size_t edge_a, edge_b;
  Vec2 direction;
  SimplePL first, last;  // extreme members of the closed family
  Rational s_lo, s_hi;   // parameter range on edge_a
};

struct NearZero {
  size_t edge_a, edge_b;
  double s, t, value;
};

struct ZeroCreases {
  ExtremalAffine density;
  Rational certificate;  // LP min at the working resolution
  int resolution;
  std::vector<SimplePL> isolated;
  std::vector<CreaseFamily> families;
  std::vector<NearZero> uncertified;
};

namespace detail {

inline double eval_d(const std::vector<std::tuple<int, int, double>>& terms, double s, double t) {
  double v = 0;
  for (const auto& [i, j, c] : terms) v += c * std::pow(s, i) * std::pow(t, j);
  return v;
}

/// Local minima of a polynomial on [0, 1]^2: grid seeds, then compass search.
inline std::vector<std::array<double, 3>> box_minima(const Poly2Q& phi, int grid = 32) {
  std::vector<std::tuple<int, int, double>> terms;
  for (const auto& [k, v] : phi.terms()) terms.emplace_back(k.first, k.second, to_double(v));
  std::vector<std::vector<double>> val(grid + 1, std::vector<double>(grid + 1));
  for (int a = 0; a <= grid; ++a)
    for (int b = 0; b <= grid; ++b) val[a][b] = eval_d(terms, double(a) / grid, double(b) / grid);
  std::vector<std::array<double, 3>> out;
  for (int a = 0; a <= grid; ++a)
    for (int b = 0; b <= grid; ++b) {
      bool local = true;
      for (int da = -1; da <= 1 && local; ++da)
        for (int db = -1; db <= 1 && local; ++db) {
          int x = a + da, y = b + db;
          if ((da || db) && x >= 0 && y >= 0 && x <= grid && y <= grid && val[x][y] < val[a][b]) local = false;
        }
      if (!local) continue;
      double s = double(a) / grid, t = double(b) / grid, v = val[a][b];
      for (double h = 1.0 / grid; h > 1e-13; h /= 2) {
        bool moved = true;
        while (moved) {
          moved = false;
          for (auto [ds, dt] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}, {h, h}, {-h, -h}, {h, -h}, {-h, h}}) {
            double s2 = std::clamp(s + ds, 0.0, 1.0), t2 = std::clamp(t + dt, 0.0, 1.0);
            double v2 = eval_d(terms, s2, t2);
            if (v2 < v) {
              s = s2, t = t2, v = v2;
              moved = true;
            }
          }
        }
      }
      out.push_back({s, t, v});
    }
  return out;
}

inline Rational recover(double x, double tol) {
  Rational lo(x - tol), hi(x + tol);
  Rational r = simplest_between(lo, hi);
  if (r < 0) r = 0;
  if (r > 1) r = 1;
  return r;
}

}  // namespace detail

/// All simple PL functions with L_A = 0 whose crease meets the interior of P; A defaults to extremal_affine(P).
/// Requires the LP at `resolution` to certify L_A >= 0.
inline ZeroCreases find_zero_creases(const RationalPolygon& P, int resolution = 4,
                                     const std::optional<ExtremalAffine>& density = std::nullopt) {
  ZeroCreases out;
  out.density = density ? *density : extremal_affine(P);
  out.resolution = resolution;
  auto cone = minimize_convex_cone(P, resolution, out.density);
  out.certificate = cone.value;
  if (cone.value < 0)
    throw PreconditionError("polygon is not semistable at resolution " + std::to_string(resolution) +
                            " (LP min " + to_string(cone.value) + ")");
  const size_t n = P.size();
  auto add_isolated = [&](const SimplePL& c) {
    for (const auto& x : out.isolated)
      if (same_chord(x, c)) return;
    out.isolated.push_back(c);
  };
  auto add_family = [&](const CreaseFamily& f) {
    for (const auto& x : out.families)
      if (same_chord(x.first, f.first) && same_chord(x.last, f.last)) return;
    for (const auto& x : out.families)
      if (same_chord(x.first, f.last) && same_chord(x.last, f.first)) return;
    out.families.push_back(f);
  };
  // ordered pairs give both sides of every chord; the two agree when A is extremal
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      Poly2Q phi = crease_polynomial(P, out.density, i, j);
      if (phi.is_zero()) throw Error(ErrorCode::internal, "crease polynomial vanishes identically");
      // chords along an edge of P give l affine on P or f = 0: divide those trivial zeros out
      Poly2Q red = phi;
      if ((i + 1) % n == j) {
        red = detail::divide_out(red, 0, Rational(1));
        red = detail::divide_out(red, 1, Rational(0));
      }
      if ((j + 1) % n == i) {
        red = detail::divide_out(red, 0, Rational(0));
        red = detail::divide_out(red, 1, Rational(1));
      }
      double scale = 0;
      for (const auto& [k, v] : red.terms()) scale = std::max(scale, std::fabs(to_double(v)));
      for (const auto& [sd, td, vd] : detail::box_minima(red)) {
        if (std::fabs(vd) > 1e-9 * scale) continue;
        Vec2 pd = edge_point(P, i, Rational(sd)), qd = edge_point(P, j, Rational(td));
        Vec2 dd = qd - pd;
        bool found = false;
        // parallel family through the approximate zero
        if (dd.x != 0 || dd.y != 0) {
          Vec2 D;
          if (abs(dd.x) >= abs(dd.y)) D = {Rational(1), simplest_between(dd.y / dd.x - Rational(1e-7), dd.y / dd.x + Rational(1e-7))};
          else D = {simplest_between(dd.x / dd.y - Rational(1e-7), dd.x / dd.y + Rational(1e-7)), Rational(1)};
          const auto &Ei = P.edges()[i], &Ej = P.edges()[j];
          Rational ci = cross(D, Ei.end - Ei.start), cj = cross(D, Ej.end - Ej.start), c0 = cross(D, Ej.start - Ei.start);
          // c0 + t cj - s ci = 0
          if (ci != 0 && cj != 0) {
            Rational alpha = ci / cj, beta = -c0 / cj;  // t = alpha s + beta
            Poly<Rational> restricted = phi.along(Rational(0), beta, Rational(1), alpha);
            if (restricted.is_zero()) {
              Rational e0 = -beta / alpha, e1 = (1 - beta) / alpha;
              Rational lo = std::max(Rational(0), std::min(e0, e1)), hi = std::min(Rational(1), std::max(e0, e1));
              if (lo < hi) {
                auto member = [&](const Rational& s) {
                  return SimplePL{edge_point(P, i, s), edge_point(P, j, alpha * s + beta)};
                };
                if (member((lo + hi) / 2).meets_interior(P)) {
                  add_family({i, j, D, member(lo), member(hi), lo, hi});
                  found = true;
                }
              }
            }
          }
        }
        if (!found) {
          Rational s = detail::recover(sd, 1e-6), t = detail::recover(td, 1e-6);
          SimplePL c{edge_point(P, i, s), edge_point(P, j, t)};
          if (phi(s, t) == 0 && c.meets_interior(P)) {
            add_isolated(c);
            found = true;
          }
        }
        if (!found) {
          Vec2 pa = edge_point(P, i, Rational(sd)), qa = edge_point(P, j, Rational(td));
          if (SimplePL{pa, qa}.meets_interior(P)) out.uncertified.push_back({i, j, sd, td, vd});
        }
      }
    }
  // isolated zeros lying inside a family are members of it
  std::vector<SimplePL> keep;
  for (const auto& c : out.isolated) {
    bool member = false;
    for (const auto& f : out.families) {
      Vec2 d = c.q - c.p;
      if (cross(d, f.direction) != 0) continue;
      Vec2 m = Rational(1, 2) * (c.p + c.q);
      Rational a = cross(f.direction, m - f.first.p), b = cross(f.direction, m - f.last.p);
      if ((a >= 0 && b <= 0) || (a <= 0 && b >= 0)) member = true;
    }
    if (!member) keep.push_back(c);
  }
  out.isolated = keep;
  return out;
}

// ---- decomposition ----

enum class PieceKind { polystable, parallelogram };

inline const char* piece_kind_name(PieceKind k) { return k == PieceKind::polystable ? "polystable" : "parallelogram"; }

struct DecompositionPiece {
  RationalPolygon polygon;
  PieceKind kind;
  Rational lp_min;               // pair functional with the density of P
  ExtremalAffine own_density;    // extremal affine of the piece with its inherited measure
};

struct DecompositionResult {
  ExtremalAffine density;
  std::vector<DecompositionPiece> pieces;
  std::vector<SimplePL> creases;       // every cut
  std::vector<CreaseFamily> families;
  Rational certificate;
  int resolution;
};

namespace detail {

/// Closed segments meet at a point strictly inside P.
inline bool creases_cross(const SimplePL& a, const SimplePL& b, const RationalPolygon& P) {
  Rational o1 = orient(a.p, a.q, b.p), o2 = orient(a.p, a.q, b.q);
  Rational o3 = orient(b.p, b.q, a.p), o4 = orient(b.p, b.q, a.q);
  if (o1 == 0 && o2 == 0) {
    // collinear: overlapping interiors count
    return same_chord(a, b) ? false : P.contains_strictly(Rational(1, 2) * (b.p + b.q)) &&
                                          (dot(b.p - a.p, b.p - a.q) < 0 || dot(b.q - a.p, b.q - a.q) < 0);
  }
  if (sign(o1) * sign(o2) > 0 || sign(o3) * sign(o4) > 0) return false;
  // intersection point
  Rational t = o3 / (o3 - o4);
  Vec2 x = a.p + t * (a.q - a.p);
  return P.contains_strictly(x);
}

inline bool is_parallelogram(const std::vector<Vec2>& v) {
  if (v.size() != 4) return false;
  return cross(v[1] - v[0], v[2] - v[3]) == 0 && cross(v[2] - v[1], v[3] - v[0]) == 0;
}

}  // namespace detail

inline DecompositionResult semistable_decomposition(const RationalPolygon& P, int resolution = 4,
                                                    const std::optional<ExtremalAffine>& density = std::nullopt) {
  ZeroCreases z = find_zero_creases(P, resolution, density);
  DecompositionResult out;
  out.density = z.density;
  out.certificate = z.certificate;
  out.resolution = resolution;
  out.families = z.families;
  for (const auto& c : z.isolated) out.creases.push_back(c);
  for (const auto& f : z.families)
    for (const SimplePL& c : {f.first, f.last})
      if (c.meets_interior(P)) out.creases.push_back(c);
  for (size_t a = 0; a < out.creases.size(); ++a)
    for (size_t b = a + 1; b < out.creases.size(); ++b)
      if (detail::creases_cross(out.creases[a], out.creases[b], P))
        throw Error(ErrorCode::internal, "zero creases intersect inside the polygon");
  std::vector<TaggedPolygon> pieces{TaggedPolygon::from(P)};
  for (const auto& c : out.creases) {
    Affine l = c.lattice_form();
    std::vector<TaggedPolygon> next;
    for (const auto& piece : pieces) {
      TaggedPolygon plus = clip(piece, l), minus = clip(piece, Rational(-1) * l);
      if (!plus.empty() && !minus.empty() && area_of(plus.vertices) > 0 && area_of(minus.vertices) > 0) {
        next.push_back(plus);
        next.push_back(minus);
      } else {
        next.push_back(piece);
      }
    }
    pieces = next;
  }
  Rational total(0);
  for (const auto& tp : pieces) {
    RationalPolygon Q = tp.polygon();
    total += Q.area();
    Vec2 m = Q.vertex_centroid();
    bool in_family = false;
    for (const auto& f : z.families) {
      Rational a = cross(f.direction, m - f.first.p), b = cross(f.direction, m - f.last.p);
      if ((a > 0 && b < 0) || (a < 0 && b > 0)) in_family = true;
    }
    PieceKind kind = PieceKind::polystable;
    if (in_family) {
      if (!detail::is_parallelogram(Q.vertices()))
        throw Error(ErrorCode::internal, "region swept by a crease family is not a parallelogram");
      kind = PieceKind::parallelogram;
    }
    auto cone = minimize_convex_cone(Q, resolution, z.density);
    if (cone.value < 0) throw Error(ErrorCode::internal, "decomposition piece fails the pair functional");
    out.pieces.push_back({Q, kind, cone.value, extremal_affine(Q)});
  }
  if (total != P.area()) throw Error(ErrorCode::internal, "decomposition pieces do not tile the polygon");
  return out;
}

}  // namespace kstab
