#pragma once
// Independent checks for the torus GIT module: LP feasibility instead of facets, Frank-Wolfe instead of the
// exact face search, and direction sampling instead of facet distances.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "kstab/core/lp.hpp"

namespace oracle {

using kstab::Rational;
using kstab::VecQ;

/// max t with 0 = sum l_j v_j, sum l_j = 1, l_j >= t; returns nullopt when 0 is outside the hull.
inline std::optional<Rational> interior_margin(const std::vector<VecQ>& pts) {
  using namespace kstab::lp;
  size_t n = pts.size(), d = pts[0].size();
  // variables: l_1..l_n, t+, t- (t = t+ - t-); minimize -t
  Problem p;
  p.num_vars = n + 2;
  p.objective.assign(n + 2, Rational(0));
  p.objective[n] = -1;
  p.objective[n + 1] = 1;
  for (size_t i = 0; i < d; ++i) {
    VecQ row(n + 2, Rational(0));
    for (size_t j = 0; j < n; ++j) row[j] = pts[j][i];
    p.add(row, Relation::eq, Rational(0));
  }
  VecQ ones(n + 2, Rational(0));
  for (size_t j = 0; j < n; ++j) ones[j] = 1;
  p.add(ones, Relation::eq, Rational(1));
  for (size_t j = 0; j < n; ++j) {
    VecQ row(n + 2, Rational(0));
    row[j] = 1;
    row[n] = -1;
    row[n + 1] = 1;
    p.add(row, Relation::ge, Rational(0));
  }
  // keep t bounded
  VecQ cap(n + 2, Rational(0));
  cap[n] = 1;
  cap[n + 1] = -1;
  p.add(cap, Relation::le, Rational(1));
  auto s = solve(p);
  if (s.status != Status::optimal) return std::nullopt;
  return -s.value;
}

/// Pairwise Frank-Wolfe on min |sum l_j v_j|^2 over the simplex, in double (linear convergence on polytopes).
inline double distance_sq_fw(const std::vector<std::vector<double>>& pts, int iters = 100000) {
  size_t n = pts.size(), d = pts[0].size();
  std::vector<double> lam(n, 0.0), x = pts[0];
  lam[0] = 1;
  auto ip = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
  };
  for (int k = 0; k < iters; ++k) {
    size_t to = 0, from = n;
    double lo = INFINITY, hi = -INFINITY;
    for (size_t j = 0; j < n; ++j) {
      double v = ip(x, pts[j]);
      if (v < lo) lo = v, to = j;
      if (lam[j] > 0 && v > hi) hi = v, from = j;
    }
    if (hi - lo < 1e-15) break;
    std::vector<double> dir(d);
    double den = 0;
    for (size_t i = 0; i < d; ++i) den += (dir[i] = pts[to][i] - pts[from][i]) * dir[i];
    double t = std::clamp(-ip(x, dir) / den, 0.0, lam[from]);
    lam[to] += t;
    lam[from] -= t;
    for (size_t i = 0; i < d; ++i) x[i] += t * dir[i];
  }
  return ip(x, x);
}

/// min over unit directions in span(basis) of max_j <u, v_j>: random starts, then shrinking random-perturbation
/// descent from the best few. Upper estimate of the support-function minimum.
inline double sampled_min_support(const std::vector<std::vector<double>>& pts,
                                  const std::vector<std::vector<double>>& basis, int samples, std::mt19937& rng) {
  std::normal_distribution<double> g;
  size_t d = pts[0].size(), k = basis.size();
  auto value = [&](const std::vector<double>& c) -> double {
    std::vector<double> u(d, 0.0);
    for (size_t r = 0; r < k; ++r)
      for (size_t i = 0; i < d; ++i) u[i] += c[r] * basis[r][i];
    double n = 0;
    for (double x : u) n += x * x;
    n = std::sqrt(n);
    if (n == 0) return INFINITY;
    double m = -INFINITY;
    for (const auto& p : pts) {
      double v = 0;
      for (size_t i = 0; i < d; ++i) v += u[i] * p[i] / n;
      m = std::max(m, v);
    }
    return m;
  };
  std::vector<std::pair<double, std::vector<double>>> starts;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> c(k);
    for (auto& x : c) x = g(rng);
    starts.push_back({value(c), c});
  }
  std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double best = INFINITY;
  for (size_t s = 0; s < std::min<size_t>(starts.size(), 10); ++s) {
    auto [v, c] = starts[s];
    double cn = 0;
    for (double x : c) cn += x * x;
    for (auto& x : c) x /= std::sqrt(cn);
    for (double step = 0.5; step > 1e-12; step /= 2) {
      for (int trial = 0; trial < 200; ++trial) {
        auto c2 = c;
        for (auto& x : c2) x += step * g(rng);
        double v2 = value(c2);
        if (v2 < v) {
          v = v2;
          double n2 = 0;
          for (double x : c2) n2 += x * x;
          for (auto& x : c2) x /= std::sqrt(n2);
          c = c2;
        }
      }
    }
    best = std::min(best, v);
  }
  return best;
}

}  // namespace oracle
