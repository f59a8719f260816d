#pragma once
// Independent integration for polygon functionals: Green's theorem on x-antiderivatives instead of simplex
// moments, a private half-plane clipper, and brute-force vertex enumeration for tiny LPs.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "kstab/core/numeric.hpp"

namespace oracle {

using kstab::Integer;
using kstab::Rational;

struct Pt {
  Rational x, y;
};

/// Dense bivariate polynomial: c[i][j] x^i y^j.
struct BiPoly {
  std::map<std::pair<int, int>, Rational> c;
  static BiPoly affine(const Rational& a, const Rational& b, const Rational& d) {
    BiPoly p;
    p.c[{0, 0}] = a;
    p.c[{1, 0}] = b;
    p.c[{0, 1}] = d;
    return p;
  }
  BiPoly operator*(const BiPoly& o) const {
    BiPoly r;
    for (auto& [k, v] : c)
      for (auto& [l, w] : o.c) r.c[{k.first + l.first, k.second + l.second}] += v * w;
    return r;
  }
  Rational at(const Pt& p) const {
    Rational s(0);
    for (auto& [k, v] : c) {
      Rational t = v;
      for (int i = 0; i < k.first; ++i) t *= p.x;
      for (int j = 0; j < k.second; ++j) t *= p.y;
      s += t;
    }
    return s;
  }
};

/// Univariate in u on [0, 1]: coefficients.
using UPoly = std::vector<Rational>;

inline UPoly umul(const UPoly& a, const UPoly& b) {
  UPoly r(a.size() + b.size() - 1, Rational(0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}
inline Rational uint01(const UPoly& a) {
  Rational s(0);
  for (size_t i = 0; i < a.size(); ++i) s += a[i] / Rational(static_cast<long>(i + 1));
  return s;
}

/// Double integral over a counterclockwise polygon: sum over edges of the line integral of G dy,
/// with G = int g dx.
inline Rational area_integral(const BiPoly& g, const std::vector<Pt>& poly) {
  Rational total(0);
  size_t n = poly.size();
  for (size_t e = 0; e < n; ++e) {
    const Pt& a = poly[e];
    const Pt& b = poly[(e + 1) % n];
    Rational dy = b.y - a.y;
    if (dy == 0) continue;
    UPoly X{a.x, b.x - a.x}, Y{a.y, dy};
    UPoly acc{Rational(0)};
    for (auto& [k, v] : g.c) {
      // antiderivative term v x^(i+1)/(i+1) y^j
      UPoly term{v / Rational(k.first + 1)};
      for (int i = 0; i <= k.first; ++i) term = umul(term, X);
      for (int j = 0; j < k.second; ++j) term = umul(term, Y);
      if (term.size() > acc.size()) acc.resize(term.size(), Rational(0));
      for (size_t i = 0; i < term.size(); ++i) acc[i] += term[i];
    }
    total += uint01(acc) * dy;
  }
  return total;
}

/// Number of lattice steps on a rational segment: |d| measured in the primitive integer direction.
inline Rational lattice_len(const Pt& a, const Pt& b) {
  Rational dx = b.x - a.x, dy = b.y - a.y;
  if (dx == 0 && dy == 0) return Rational(0);
  // scale to integers, divide by gcd
  Integer L = boost::multiprecision::lcm(kstab::denom(dx), kstab::denom(dy));
  Integer ix = kstab::numer(dx * Rational(L)), iy = kstab::numer(dy * Rational(L));
  Integer g = boost::multiprecision::gcd(ix < 0 ? Integer(-ix) : ix, iy < 0 ? Integer(-iy) : iy);
  return Rational(g) / Rational(L);
}

/// Weighted lattice-measure integral of g along the boundary (weights[e] on the edge leaving vertex e).
inline Rational boundary_integral(const BiPoly& g, const std::vector<Pt>& poly, const std::vector<Rational>& w) {
  Rational total(0);
  size_t n = poly.size();
  for (size_t e = 0; e < n; ++e) {
    if (w[e] == 0) continue;
    const Pt& a = poly[e];
    const Pt& b = poly[(e + 1) % n];
    UPoly X{a.x, b.x - a.x}, Y{a.y, b.y - a.y};
    UPoly acc{Rational(0)};
    for (auto& [k, v] : g.c) {
      UPoly term{v};
      for (int i = 0; i < k.first; ++i) term = umul(term, X);
      for (int j = 0; j < k.second; ++j) term = umul(term, Y);
      if (term.size() > acc.size()) acc.resize(term.size(), Rational(0));
      for (size_t i = 0; i < term.size(); ++i) acc[i] += term[i];
    }
    total += w[e] * lattice_len(a, b) * uint01(acc);
  }
  return total;
}

/// Sutherland-Hodgman clip to {a + b x + c y >= 0}; weights follow their edges, the cut edge gets weight 0.
inline void clip_halfplane(std::vector<Pt>& poly, std::vector<Rational>& w, const Rational& a, const Rational& b,
                           const Rational& c) {
  std::vector<Pt> out;
  std::vector<Rational> ow;
  size_t n = poly.size();
  auto val = [&](const Pt& p) { return a + b * p.x + c * p.y; };
  for (size_t i = 0; i < n; ++i) {
    const Pt& p = poly[i];
    const Pt& q = poly[(i + 1) % n];
    Rational fp = val(p), fq = val(q);
    auto cut = [&] {
      Rational t = fp / (fp - fq);
      return Pt{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
    };
    if (fp >= 0) {
      out.push_back(p);
      ow.push_back(fp == 0 && fq < 0 ? Rational(0) : w[i]);
      if (fp > 0 && fq < 0) {
        out.push_back(cut());
        ow.push_back(Rational(0));
      }
    } else if (fq > 0) {
      out.push_back(cut());
      ow.push_back(w[i]);
    }
  }
  poly = out;
  w = ow;
}

/// L(max(l, 0)) = int_boundary f dsigma - int_P D f dmu, with density D = d0 + d1 x + d2 y.
inline Rational simple_functional(std::vector<Pt> poly, std::vector<Rational> w, const Rational& la, const Rational& lb,
                                  const Rational& lc, const Rational& d0, const Rational& d1, const Rational& d2) {
  clip_halfplane(poly, w, la, lb, lc);
  if (poly.size() < 3) return Rational(0);
  BiPoly f = BiPoly::affine(la, lb, lc);
  // boundary part: only original edges of P contribute (cut edges carry weight 0, where f vanishes anyway)
  return boundary_integral(f, poly, w) - area_integral(f * BiPoly::affine(d0, d1, d2), poly);
}

/// Solves the 3x3 system by Cramer's rule.
inline std::array<Rational, 3> cramer3(const std::array<std::array<Rational, 3>, 3>& M, const std::array<Rational, 3>& r) {
  auto det = [](const std::array<std::array<Rational, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  Rational D = det(M);
  std::array<Rational, 3> out;
  for (int k = 0; k < 3; ++k) {
    auto Mk = M;
    for (int i = 0; i < 3; ++i) Mk[i][k] = r[i];
    out[k] = det(Mk) / D;
  }
  return out;
}

/// Density D = d0 + d1 x + d2 y with int D H = int_boundary H for H in {1, x, y}.
inline std::array<Rational, 3> extremal_density(const std::vector<Pt>& poly, const std::vector<Rational>& w) {
  std::array<BiPoly, 3> basis{BiPoly::affine(1, 0, 0), BiPoly::affine(0, 1, 0), BiPoly::affine(0, 0, 1)};
  std::array<std::array<Rational, 3>, 3> G;
  std::array<Rational, 3> rhs;
  for (int i = 0; i < 3; ++i) {
    rhs[i] = boundary_integral(basis[i], poly, w);
    for (int j = 0; j < 3; ++j) G[i][j] = area_integral(basis[i] * basis[j], poly);
  }
  return cramer3(G, rhs);
}

/// min c.x subject to A_eq x = b_eq, A_in x <= b_in, by enumerating every square active set; double precision.
/// Only for tiny instances (a few dozen constraints).
inline std::optional<double> lp_vertex_enumeration(const std::vector<std::vector<double>>& Aeq, const std::vector<double>& beq,
                                                   const std::vector<std::vector<double>>& Ain, const std::vector<double>& bin,
                                                   const std::vector<double>& c) {
  size_t n = c.size(), me = Aeq.size(), mi = Ain.size();
  size_t need = n - me;
  std::vector<size_t> pick(need);
  for (size_t i = 0; i < need; ++i) pick[i] = i;
  std::optional<double> best;
  auto solve = [&](std::vector<std::vector<double>> M, std::vector<double> r) -> std::optional<std::vector<double>> {
    size_t k = M.size();
    for (size_t col = 0; col < k; ++col) {
      size_t piv = col;
      for (size_t i = col; i < k; ++i)
        if (std::fabs(M[i][col]) > std::fabs(M[piv][col])) piv = i;
      if (std::fabs(M[piv][col]) < 1e-10) return std::nullopt;
      std::swap(M[piv], M[col]);
      std::swap(r[piv], r[col]);
      for (size_t i = 0; i < k; ++i) {
        if (i == col) continue;
        double f = M[i][col] / M[col][col];
        for (size_t j = col; j < k; ++j) M[i][j] -= f * M[col][j];
        r[i] -= f * r[col];
      }
    }
    std::vector<double> x(k);
    for (size_t i = 0; i < k; ++i) x[i] = r[i] / M[i][i];
    return x;
  };
  if (need > mi) return std::nullopt;
  for (;;) {
    std::vector<std::vector<double>> M = Aeq;
    std::vector<double> r = beq;
    for (size_t i : pick) {
      M.push_back(Ain[i]);
      r.push_back(bin[i]);
    }
    if (auto x = solve(M, r)) {
      bool ok = true;
      for (size_t i = 0; i < mi && ok; ++i) {
        double s = 0;
        for (size_t j = 0; j < n; ++j) s += Ain[i][j] * (*x)[j];
        ok = s <= bin[i] + 1e-9;
      }
      if (ok) {
        double v = 0;
        for (size_t j = 0; j < n; ++j) v += c[j] * (*x)[j];
        if (!best || v < *best) best = v;
      }
    }
    // next combination
    size_t i = need;
    while (i > 0 && pick[i - 1] == mi - need + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (size_t j = i; j < need; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

}  // namespace oracle
