#pragma once

#include <optional>

#include "kstab/core/numeric.hpp"

namespace kstab {

/// Leading data of d_k = c0 k^n + c1 k^{n-1} + ... and w_k = Tr(A_k) = a0 k^{n+1} + a1 k^n + ...
struct WeightAsymptotics {
  int n = 2;
  Rational c0, c1, a0, a1;
  std::optional<Rational> trace_sq;  // coefficient of k^{n+2} in Tr(A_k^2)

  void validate() const {
    if (n < 1) throw DomainError("dimension must be positive");
    if (c0 <= 0) throw DomainError("leading dimension coefficient must be positive");
  }

  /// A_k -> A_k + k s I.
  WeightAsymptotics lifted(const Rational& s) const {
    WeightAsymptotics out = *this;
    out.a0 += s * c0;
    out.a1 += s * c1;
    if (trace_sq) out.trace_sq = *trace_sq + 2 * s * a0 + s * s * c0;
    return out;
  }
};

inline Rational futaki(const WeightAsymptotics& w) {
  w.validate();
  return w.c1 * w.a0 / w.c0 - w.a1;
}

/// Leading coefficient of Tr(A_k B_k) - w_k(A) w_k(B) / d_k, given that of Tr(A_k B_k).
inline Rational inner_product(const WeightAsymptotics& a, const WeightAsymptotics& b, const Rational& trace_ab) {
  a.validate();
  b.validate();
  if (a.n != b.n || a.c0 != b.c0 || a.c1 != b.c1)
    throw DomainError("inner product needs actions on the same section spaces");
  return trace_ab - a.a0 * b.a0 / a.c0;
}

inline std::optional<Rational> norm_sq(const WeightAsymptotics& a) {
  if (!a.trace_sq) return std::nullopt;
  return inner_product(a, a, *a.trace_sq);
}

/// Torus generator used to project out the extremal direction.
struct TorusGenerator {
  WeightAsymptotics weights;  // its trace_sq is required
  Rational trace_cross;       // coefficient of k^{n+2} in Tr(A_k B_k)
};

struct FutakiProducts {
  Rational futaki;
  std::optional<Rational> norm_sq;
  // filled when a torus generator is given
  std::optional<Rational> inner_with_torus, torus_futaki, torus_norm_sq, relative_futaki, relative_norm_sq;
};

inline FutakiProducts futaki_and_products(const WeightAsymptotics& alpha, const std::optional<TorusGenerator>& torus = {}) {
  FutakiProducts out;
  out.futaki = futaki(alpha);
  out.norm_sq = norm_sq(alpha);
  if (!torus) return out;
  const auto& beta = torus->weights;
  if (!beta.trace_sq) throw DomainError("torus generator needs the leading coefficient of Tr(B_k^2)");
  Rational ab = inner_product(alpha, beta, torus->trace_cross);
  Rational bb = inner_product(beta, beta, *beta.trace_sq);
  if (bb == 0) throw Error(ErrorCode::precondition, "degenerate torus: <beta, beta> = 0");
  Rational fb = futaki(beta);
  out.inner_with_torus = ab;
  out.torus_futaki = fb;
  out.torus_norm_sq = bb;
  out.relative_futaki = out.futaki - ab / bb * fb;
  if (out.norm_sq) out.relative_norm_sq = *out.norm_sq - ab * ab / bb;
  return out;
}

}  // namespace kstab
