#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kstab/core/linalg.hpp"

namespace kstab::git {

/// Torus acting diagonally on P(V); weights[j] is the character on the j-th coordinate,
/// support[j] whether that coordinate of the point is nonzero.
struct WeightedAction {
  size_t dimension = 0;
  std::vector<VecQ> weights;
  std::vector<bool> support;

  void validate() const {
    if (dimension == 0) throw DomainError("torus dimension must be positive");
    if (weights.size() != support.size()) throw Error(ErrorCode::validation, "weights and support differ in length");
    bool any = false;
    for (size_t j = 0; j < weights.size(); ++j) {
      if (weights[j].size() != dimension) throw Error(ErrorCode::validation, "weight vector has the wrong dimension");
      for (const auto& x : weights[j])
        if (!is_integer(x)) throw Error(ErrorCode::validation, "weights must be integral");
      any = any || support[j];
    }
    if (!any) throw DomainError("no supported weight");
  }

  /// Supported weights with duplicates removed.
  std::vector<VecQ> supported_points() const {
    std::vector<VecQ> pts;
    for (size_t j = 0; j < weights.size(); ++j)
      if (support[j] && std::find(pts.begin(), pts.end(), weights[j]) == pts.end()) pts.push_back(weights[j]);
    return pts;
  }
  size_t supported_count() const { return static_cast<size_t>(std::count(support.begin(), support.end(), true)); }

  static WeightedAction all_supported(size_t d, std::vector<VecQ> w) {
    WeightedAction a{d, std::move(w), {}};
    a.support.assign(a.weights.size(), true);
    return a;
  }
};

/// Binary form of degree n under diag(t, 1/t): monomial x^i y^(n-i) has weight 2i - n.
inline WeightedAction binary_form_action(int n, const std::vector<bool>& coefficient_present) {
  if (n < 1 || coefficient_present.size() != static_cast<size_t>(n + 1))
    throw DomainError("binary form needs n >= 1 and n + 1 coefficient flags");
  WeightedAction a;
  a.dimension = 1;
  for (int i = 0; i <= n; ++i) a.weights.push_back({Rational(2 * i - n)});
  a.support = coefficient_present;
  return a;
}

/// Face-lattice data of the weight polytope inside its affine hull.
struct Facet {
  VecQ normal;  // lies in the direction space of the hull
  Rational offset;  // normal . x <= offset on the polytope
};

struct HullGeometry {
  std::vector<VecQ> points;
  VecQ base;
  MatQ directions;  // basis of the direction space
  size_t dim = 0;
  std::vector<Facet> facets;
  VecQ origin_projection;  // orthogonal projection of 0 onto the affine hull

  bool contains(const VecQ& p) const {
    if (dim == 0) return p == base;
    for (const auto& f : facets)
      if (dot(f.normal, p) > f.offset) return false;
    return true;
  }
  bool in_relative_interior(const VecQ& p) const {
    if (dim == 0) return p == base;
    for (const auto& f : facets)
      if (!(dot(f.normal, p) < f.offset)) return false;
    return true;
  }
};

namespace detail {

/// Calls f on every k-subset of {0, ..., n-1}.
inline void for_each_subset(size_t n, size_t k, const std::function<void(const std::vector<size_t>&)>& f) {
  if (k > n) return;
  std::vector<size_t> idx(k);
  for (size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    f(idx);
    size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline VecQ canonical(VecQ n, Rational& off) {
  Rational s(0);
  for (const auto& x : n)
    if (x != 0) {
      s = abs(x);
      break;
    }
  for (auto& x : n) x /= s;
  off /= s;
  return n;
}

}  // namespace detail

inline HullGeometry hull_geometry(const std::vector<VecQ>& points) {
  if (points.empty()) throw DomainError("empty point set");
  HullGeometry h;
  h.points = points;
  h.base = points[0];
  MatQ diffs;
  for (size_t i = 1; i < points.size(); ++i) diffs.push_back(sub(points[i], h.base));
  h.directions = row_basis(diffs);
  h.dim = h.directions.size();
  // projection of the origin: base - B^T (B B^T)^{-1} B base
  {
    size_t k = h.dim;
    h.origin_projection = h.base;
    if (k > 0) {
      MatQ G(k, VecQ(k));
      VecQ rhs(k);
      for (size_t i = 0; i < k; ++i) {
        for (size_t j = 0; j < k; ++j) G[i][j] = dot(h.directions[i], h.directions[j]);
        rhs[i] = dot(h.directions[i], h.base);
      }
      auto c = solve(G, rhs);
      for (size_t i = 0; i < k; ++i) h.origin_projection = sub(h.origin_projection, scale(h.directions[i], (*c)[i]));
    }
  }
  if (h.dim == 0) return h;
  // facets: k affinely independent points whose hyperplane (inside the hull) supports the polytope
  size_t k = h.dim;
  detail::for_each_subset(points.size(), k, [&](const std::vector<size_t>& sub_idx) {
    const VecQ& p0 = points[sub_idx[0]];
    MatQ cons;  // y with (sum_r y_r B_r) . (p_i - p0) = 0
    for (size_t i = 1; i < k; ++i) {
      VecQ d = sub(points[sub_idx[i]], p0);
      VecQ row(k);
      for (size_t r = 0; r < k; ++r) row[r] = dot(h.directions[r], d);
      cons.push_back(row);
    }
    if (k > 1 && rank(cons) != k - 1) return;
    MatQ ns = nullspace(cons, k);
    if (ns.size() != 1) return;
    VecQ normal(points[0].size(), Rational(0));
    for (size_t r = 0; r < k; ++r) normal = add(normal, scale(h.directions[r], ns[0][r]));
    Rational off = dot(normal, p0);
    bool le = true, ge = true;
    for (const auto& p : points) {
      Rational v = dot(normal, p);
      le = le && v <= off;
      ge = ge && v >= off;
    }
    if (!le && !ge) return;
    if (!le) {
      normal = scale(normal, Rational(-1));
      off = -off;
    }
    normal = detail::canonical(normal, off);
    for (const auto& f : h.facets)
      if (f.normal == normal && f.offset == off) return;
    h.facets.push_back({normal, off});
  });
  return h;
}

/// Exact nearest point of conv(points) to the origin: the projection of 0 onto the affine hull of some
/// affinely independent subset, with nonnegative barycentric coordinates and the variational inequality
/// p . (v - p) >= 0 for every point v.
inline VecQ closest_point_to_origin(const std::vector<VecQ>& points) {
  size_t d = points[0].size();
  std::optional<VecQ> best;
  for (size_t k = 1; k <= std::min(points.size(), d + 1) && !best; ++k) {
    detail::for_each_subset(points.size(), k, [&](const std::vector<size_t>& idx) {
      if (best) return;
      MatQ A(k, VecQ(k));
      VecQ b(k, Rational(0));
      for (size_t i = 1; i < k; ++i) {
        VecQ di = sub(points[idx[i]], points[idx[0]]);
        for (size_t j = 0; j < k; ++j) A[i - 1][j] = dot(points[idx[j]], di);
      }
      for (size_t j = 0; j < k; ++j) A[k - 1][j] = 1;
      b[k - 1] = 1;
      auto lam = solve(A, b);
      if (!lam) return;
      VecQ p(d, Rational(0));
      for (size_t j = 0; j < k; ++j) {
        if ((*lam)[j] < 0) return;
        p = add(p, scale(points[idx[j]], (*lam)[j]));
      }
      for (const auto& v : points)
        if (dot(p, sub(v, p)) < 0) return;
      best = p;
    });
  }
  if (!best) throw Error(ErrorCode::internal, "closest-point search failed");
  return *best;
}

enum class StabilityClass { unstable, semistable, polystable, stable };

inline const char* stability_class_name(StabilityClass c) {
  switch (c) {
    case StabilityClass::unstable: return "unstable";
    case StabilityClass::semistable: return "semistable-not-polystable";
    case StabilityClass::polystable: return "polystable-not-stable";
    case StabilityClass::stable: return "stable";
  }
  return "?";
}

struct StabilityReport {
  StabilityClass cls = StabilityClass::unstable;
  bool relative_polystable = false;
  size_t hull_dimension = 0;
  /// Squared modulus; nullopt means +infinity (polytope is the single point 0, no boundary).
  std::optional<Rational> modulus_sq = Rational(0);
  VecQ closest_point;
  Rational distance_sq;  // squared distance from 0 to the polytope = inf |mu|^2
  std::optional<VecQ> worst_direction;
  Rational worst_weight;  // hm_weight of the worst direction

  bool semistable() const { return cls != StabilityClass::unstable; }
  bool polystable() const { return cls == StabilityClass::polystable || cls == StabilityClass::stable; }
  double modulus() const { return modulus_sq ? std::sqrt(to_double(*modulus_sq)) : INFINITY; }
  double inf_moment_norm() const { return std::sqrt(to_double(distance_sq)); }
};

/// max over supported weights of <xi, alpha_j>.
inline Rational hm_weight(const WeightedAction& a, const VecQ& xi) {
  a.validate();
  if (xi.size() != a.dimension) throw Error(ErrorCode::validation, "direction has the wrong dimension");
  if (std::all_of(xi.begin(), xi.end(), [](const Rational& x) { return x == 0; }))
    throw DomainError("direction must be nonzero");
  std::optional<Rational> m;
  for (size_t j = 0; j < a.weights.size(); ++j) {
    if (!a.support[j]) continue;
    Rational v = dot(xi, a.weights[j]);
    if (!m || v > *m) m = v;
  }
  return *m;
}

inline StabilityReport classify_stability(const WeightedAction& a) {
  a.validate();
  auto pts = a.supported_points();
  auto hull = hull_geometry(pts);
  StabilityReport r;
  r.hull_dimension = hull.dim;
  VecQ zero(a.dimension, Rational(0));
  r.closest_point = closest_point_to_origin(pts);
  r.distance_sq = dot(r.closest_point, r.closest_point);
  r.relative_polystable = hull.in_relative_interior(hull.origin_projection);
  if (r.distance_sq != 0) {
    r.cls = StabilityClass::unstable;
    r.worst_direction = scale(r.closest_point, Rational(-1));
    r.worst_weight = hm_weight(a, *r.worst_direction);
    return r;
  }
  if (!hull.in_relative_interior(zero)) {
    r.cls = StabilityClass::semistable;
    for (const auto& f : hull.facets)
      if (f.offset == 0) {
        r.worst_direction = f.normal;
        r.worst_weight = 0;
        break;
      }
    return r;
  }
  r.cls = hull.dim == a.dimension ? StabilityClass::stable : StabilityClass::polystable;
  if (hull.dim == 0) {
    r.modulus_sq = std::nullopt;
    return r;
  }
  // distance to the relative boundary: min over facet hyperplanes of offset^2 / |normal|^2
  for (const auto& f : hull.facets) {
    Rational d2 = f.offset * f.offset / dot(f.normal, f.normal);
    if (!r.worst_direction || d2 < *r.modulus_sq) {
      r.modulus_sq = d2;
      r.worst_direction = f.normal;
      r.worst_weight = f.offset;
    }
  }
  return r;
}

/// Element of the stabilizer algebra dual to the weight functional: the projection of 0 onto the affine hull.
inline VecQ extremal_field(const WeightedAction& a) {
  a.validate();
  return hull_geometry(a.supported_points()).origin_projection;
}

// ---- floating-point moment geometry ----

using VecD = std::vector<double>;

inline double dotd(const VecD& a, const VecD& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double normd(const VecD& a) { return std::sqrt(dotd(a, a)); }

struct WeightsD {
  std::vector<VecD> w;  // supported weights, with multiplicity
  explicit WeightsD(const WeightedAction& a) {
    a.validate();
    for (size_t j = 0; j < a.weights.size(); ++j) {
      if (!a.support[j]) continue;
      VecD v;
      for (const auto& x : a.weights[j]) v.push_back(to_double(x));
      w.push_back(v);
    }
  }
  /// softmax probabilities p_j proportional to exp(2 <xi, alpha_j>), plus the log-sum-exp
  std::pair<VecD, double> probabilities(const VecD& xi) const {
    VecD e(w.size());
    double mx = -INFINITY;
    for (size_t j = 0; j < w.size(); ++j) mx = std::max(mx, 2 * dotd(xi, w[j]));
    double s = 0;
    for (size_t j = 0; j < w.size(); ++j) s += (e[j] = std::exp(2 * dotd(xi, w[j]) - mx));
    for (auto& x : e) x /= s;
    return {e, mx + std::log(s)};
  }
};

/// sum alpha_j e^{2<xi,alpha_j>} / sum e^{2<xi,alpha_j>} over supported weights.
inline VecD moment_map(const WeightedAction& a, const VecD& xi) {
  WeightsD W(a);
  if (xi.size() != a.dimension) throw Error(ErrorCode::validation, "direction has the wrong dimension");
  auto [p, lse] = W.probabilities(xi);
  VecD mu(a.dimension, 0.0);
  for (size_t j = 0; j < p.size(); ++j)
    for (size_t i = 0; i < mu.size(); ++i) mu[i] += p[j] * W.w[j][i];
  return mu;
}

/// (1/2) log sum e^{2<xi,alpha_j>}; its gradient is the moment map.
inline double norm_functional(const WeightedAction& a, const VecD& xi) {
  return WeightsD(a).probabilities(xi).second / 2;
}

/// Derivative of the moment map: 2 (sum p a a^T - mu mu^T).
inline Eigen::MatrixXd moment_derivative(const WeightedAction& a, const VecD& xi) {
  WeightsD W(a);
  size_t d = a.dimension;
  auto [p, lse] = W.probabilities(xi);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (size_t j = 0; j < p.size(); ++j) {
    Eigen::Map<const Eigen::VectorXd> v(W.w[j].data(), d);
    H += p[j] * v * v.transpose();
    mu += p[j] * v;
  }
  return 2 * (H - mu * mu.transpose());
}

struct KempfNessOptions {
  double tol = 1e-10;
  double divergence_bound = 1e3;
  int max_iterations = 20000;
};

struct KempfNessResult {
  VecD xi, mu;
  double mu_norm = 0;
  bool converged = false;
  bool diverged = false;
  std::optional<VecD> recession_direction;  // unit vector, -mu/|mu| at the last iterate
  int iterations = 0;
};

namespace detail {

/// Damped Newton on (1/2) log sum e^{2<xi, w_j>} until the gradient norm is <= tol; returns false on stall.
inline bool newton_descent(const WeightsD& W, VecD& xi, double tol, int max_iterations, int& iterations) {
  size_t d = xi.size();
  auto eval = [&](const VecD& x, VecD& grad, Eigen::MatrixXd* H) {
    auto [p, lse] = W.probabilities(x);
    grad.assign(d, 0.0);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
    for (size_t j = 0; j < p.size(); ++j) {
      for (size_t i = 0; i < d; ++i) grad[i] += p[j] * W.w[j][i];
      if (H) {
        Eigen::Map<const Eigen::VectorXd> v(W.w[j].data(), d);
        S += p[j] * v * v.transpose();
      }
    }
    if (H) {
      Eigen::Map<const Eigen::VectorXd> g(grad.data(), d);
      *H = 2 * (S - g * g.transpose());
    }
    return lse / 2;
  };
  VecD g, gn;
  Eigen::MatrixXd H;
  for (iterations = 0; iterations < max_iterations; ++iterations) {
    double f0 = eval(xi, g, &H);
    double gnorm = normd(g);
    if (gnorm <= tol) return true;
    Eigen::Map<const Eigen::VectorXd> gv(g.data(), d);
    Eigen::VectorXd step = -(H + (1e-12 + 1e-8 * gnorm) * Eigen::MatrixXd::Identity(d, d)).ldlt().solve(gv);
    double len = step.norm();
    if (len > 4) step *= 4 / len;
    double slope = gv.dot(step);
    VecD next(d);
    bool accepted = false;
    for (double t = 1.0; t > 1e-12; t /= 2) {
      for (size_t i = 0; i < d; ++i) next[i] = xi[i] + t * step[i];
      double f1 = eval(next, gn, nullptr);
      // near the optimum f stops resolving, so fall back to the gradient norm as merit
      bool flat = std::abs(f1 - f0) <= 1e-14 * (1 + std::abs(f0));
      if (f1 <= f0 + 1e-4 * t * slope || (flat && normd(gn) < gnorm)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return false;
    xi = next;
  }
  return false;
}

}  // namespace detail

/// Newton descent of the norm functional. Semistable input: descend until |mu| <= tol. Unstable input: descend
/// the functional for the weights shifted by the certified nearest point p (so mu -> p), then move out along -p
/// until |xi| passes the divergence bound; the recession direction is -mu/|mu| there.
inline KempfNessResult minimize_norm_functional(const WeightedAction& a, const KempfNessOptions& opt = {}) {
  if (!(opt.tol > 0)) throw DomainError("tolerance must be positive");
  auto rep = classify_stability(a);
  size_t d = a.dimension;
  WeightsD W(a);
  VecD p;
  for (const auto& x : rep.closest_point) p.push_back(to_double(x));
  bool unstable = rep.cls == StabilityClass::unstable;
  if (unstable)
    for (auto& w : W.w)
      for (size_t i = 0; i < d; ++i) w[i] -= p[i];
  KempfNessResult r;
  r.xi.assign(d, 0.0);
  bool ok = detail::newton_descent(W, r.xi, opt.tol, opt.max_iterations, r.iterations);
  if (unstable && ok) {
    double pn = normd(p);
    double s = opt.divergence_bound + 1 + normd(r.xi);
    for (size_t i = 0; i < d; ++i) r.xi[i] -= s * p[i] / pn;
  }
  r.mu = moment_map(a, r.xi);
  r.mu_norm = normd(r.mu);
  if (!ok) throw Error(ErrorCode::non_convergence, "Kempf-Ness minimization stalled without a divergence certificate");
  if (!unstable) {
    r.converged = true;
    return r;
  }
  if (!(normd(r.xi) > opt.divergence_bound && r.mu_norm >= rep.inf_moment_norm() / 2))
    throw Error(ErrorCode::non_convergence, "unstable descent did not separate from the origin");
  r.diverged = true;
  VecD dir(d);
  for (size_t i = 0; i < d; ++i) dir[i] = -r.mu[i] / r.mu_norm;
  r.recession_direction = dir;
  return r;
}

struct EigenvalueBound {
  double min_eigenvalue = 0;
  double modulus = 0;
  size_t n = 0;
  double bound = 0;
  bool holds = false;
};

/// Smallest eigenvalue of the moment-map derivative at the moment zero, restricted to the hull directions,
/// against 2 lambda^2 / n with n the number of supported weights.
inline EigenvalueBound eigenvalue_bound_check(const WeightedAction& a) {
  auto rep = classify_stability(a);
  if (!rep.polystable()) throw PreconditionError("eigenvalue bound needs a polystable point");
  if (rep.hull_dimension == 0) throw PreconditionError("eigenvalue bound needs a nontrivial action");
  auto kn = minimize_norm_functional(a);
  Eigen::MatrixXd H = moment_derivative(a, kn.xi);
  auto hull = hull_geometry(a.supported_points());
  Eigen::MatrixXd B(a.dimension, hull.dim);
  for (size_t r = 0; r < hull.dim; ++r)
    for (size_t i = 0; i < a.dimension; ++i) B(i, r) = to_double(hull.directions[r][i]);
  Eigen::MatrixXd Q = B.householderQr().householderQ() * Eigen::MatrixXd::Identity(a.dimension, hull.dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q.transpose() * H * Q);
  EigenvalueBound out;
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.modulus = rep.modulus();
  out.n = a.supported_count();
  out.bound = 2 * out.modulus * out.modulus / static_cast<double>(out.n);
  out.holds = out.min_eigenvalue >= out.bound * (1 - 1e-12);
  return out;
}

struct LowerBoundCheck {
  double weight = 0;  // F_chi(alpha) = hm_weight(alpha) - <alpha, chi>
  double lhs = 0;     // inf |mu|^2
  double rhs = 0;     // |chi|^2 + F_chi^2 / |alpha|^2
  bool holds = false;
  bool skipped = false;
  std::string reason;
};

inline LowerBoundCheck moment_lower_bound_check(const WeightedAction& a, const VecQ& alpha, const VecD& chi) {
  auto rep = classify_stability(a);
  if (chi.size() != a.dimension) throw Error(ErrorCode::validation, "chi has the wrong dimension");
  for (const auto& x : alpha)
    if (!is_integer(x)) throw Error(ErrorCode::validation, "alpha must be an integer vector");
  LowerBoundCheck out;
  VecD al;
  for (const auto& x : alpha) al.push_back(to_double(x));
  out.weight = to_double(hm_weight(a, alpha)) - dotd(al, chi);
  out.lhs = to_double(rep.distance_sq);
  if (!(out.weight < 0)) {
    out.skipped = true;
    out.reason = "weight F_chi(alpha) is not negative";
    return out;
  }
  out.rhs = dotd(chi, chi) + out.weight * out.weight / dotd(al, al);
  out.holds = out.lhs >= out.rhs - 1e-12 * (1 + out.rhs);
  return out;
}

}  // namespace kstab::git
