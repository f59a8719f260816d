#pragma once

#include <set>
#include <vector>

#include "kstab/core/poly.hpp"
#include "kstab/core/poly2.hpp"
#include "kstab/geometry/integrate.hpp"

namespace kstab {

/// Sum of Q over the lattice points of the dilate kP.
inline Rational lattice_sum(const RationalPolygon& P, const Poly2Q& Q, long k) {
  std::vector<Vec2> V;
  for (const auto& v : P.vertices()) V.push_back(Rational(k) * v);
  Rational xmin = V[0].x, xmax = V[0].x;
  for (const auto& v : V) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
  }
  Rational total(0);
  for (Integer x = ceil(xmin); Rational(x) <= xmax; ++x) {
    Rational xr(x);
    // each CCW edge p -> q gives orient(p, q, (x, y)) >= 0, linear in y
    bool empty = false;
    std::optional<Rational> lo, hi;
    for (size_t i = 0; i < V.size() && !empty; ++i) {
      const Vec2& p = V[i];
      const Vec2& q = V[(i + 1) % V.size()];
      Rational coef = q.x - p.x;                        // coefficient of y
      Rational rest = -(q.y - p.y) * (xr - p.x) - coef * p.y;  // orient = coef*y + rest
      if (coef == 0) {
        if (rest < 0) empty = true;
      } else if (coef > 0) {
        Rational b = -rest / coef;
        if (!lo || b > *lo) lo = b;
      } else {
        Rational b = -rest / coef;
        if (!hi || b < *hi) hi = b;
      }
    }
    if (empty || !lo || !hi || *lo > *hi) continue;
    Poly<Rational> col = Q.at_x(xr);
    for (Integer y = ceil(*lo); Rational(y) <= *hi; ++y) total += col(Rational(y));
  }
  return total;
}

struct LatticeExpansion {
  std::vector<long> ks;
  std::vector<Rational> sums;  // sum of Q over kP per k
  Rational leading;            // coefficient that must equal int Q dmu
  Rational subleading;         // coefficient that must equal (1/2) int Q dsigma
  bool exact_fit = true;       // residual-free on the surplus nodes
};

/// Fits the dilation sums of each homogeneous part Q_d (a polynomial of degree d + 2 in k)
/// and collects the k^{d+2} and k^{d+1} coefficients.
inline LatticeExpansion lattice_sum_expansion(const RationalPolygon& P, const Poly2Q& Q, const std::vector<long>& k_list) {
  if (!P.is_lattice()) throw DomainError("lattice_sum_expansion needs integral vertices");
  std::set<long> distinct(k_list.begin(), k_list.end());
  for (long k : distinct)
    if (k <= 0) throw DomainError("dilation factors must be positive");
  std::vector<long> ks(distinct.begin(), distinct.end());
  int top = std::max(Q.total_degree(), 0);
  if (ks.size() < static_cast<size_t>(top + 3) || ks.size() < 3)
    throw Error(ErrorCode::arity, "need at least " + std::to_string(std::max(top + 3, 3)) +
                                      " distinct dilation factors for a degree-" + std::to_string(top) + " weight");
  LatticeExpansion out;
  out.ks = ks;
  out.sums.assign(ks.size(), Rational(0));
  out.leading = 0;
  out.subleading = 0;
  for (int d = 0; d <= top; ++d) {
    Poly2Q part;
    for (const auto& [key, v] : Q.terms())
      if (key.first + key.second == d) part += Poly2Q::monomial(v, key.first, key.second);
    if (part.is_zero()) continue;
    std::vector<Rational> xs, ys;
    for (size_t i = 0; i < ks.size(); ++i) {
      Rational s = lattice_sum(P, part, ks[i]);
      out.sums[i] += s;
      xs.emplace_back(ks[i]);
      ys.push_back(s);
    }
    PolyQ fit = lagrange_fit(xs, ys);
    if (fit.degree() > d + 2) out.exact_fit = false;
    out.leading += fit.coeff(d + 2);
    out.subleading += fit.coeff(d + 1);
  }
  return out;
}

}  // namespace kstab
