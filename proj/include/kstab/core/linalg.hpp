#pragma once

#include <optional>
#include <vector>

#include "kstab/core/numeric.hpp"

namespace kstab {

using VecQ = std::vector<Rational>;
using MatQ = std::vector<VecQ>;

inline Rational dot(const VecQ& a, const VecQ& b) {
  Rational s(0);
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline VecQ sub(const VecQ& a, const VecQ& b) {
  VecQ r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline VecQ add(const VecQ& a, const VecQ& b) {
  VecQ r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline VecQ scale(const VecQ& a, const Rational& s) {
  VecQ r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

/// Reduced row echelon form in place; returns pivot columns.
inline std::vector<size_t> rref(MatQ& m) {
  std::vector<size_t> pivots;
  if (m.empty()) return pivots;
  size_t rows = m.size(), cols = m[0].size(), r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t p = r;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[r]);
    Rational inv = Rational(1) / m[r][c];
    for (size_t j = c; j < cols; ++j) m[r][j] *= inv;
    for (size_t i = 0; i < rows; ++i) {
      if (i == r || m[i][c] == 0) continue;
      Rational f = m[i][c];
      for (size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

inline size_t rank(MatQ m) { return rref(m).size(); }

/// Unique solution of the square system A x = b, or nullopt when singular.
inline std::optional<VecQ> solve(const MatQ& A, const VecQ& b) {
  size_t n = A.size();
  MatQ aug(n, VecQ(n + 1));
  for (size_t i = 0; i < n; ++i) {
    if (A[i].size() != n) return std::nullopt;
    for (size_t j = 0; j < n; ++j) aug[i][j] = A[i][j];
    aug[i][n] = b[i];
  }
  auto piv = rref(aug);
  if (piv.size() < n || piv.back() >= n) return std::nullopt;
  VecQ x(n);
  for (size_t i = 0; i < n; ++i) x[i] = aug[i][n];
  return x;
}

/// Basis of the null space {x : M x = 0}.
inline MatQ nullspace(MatQ m, size_t cols) {
  if (m.empty()) {
    MatQ basis(cols, VecQ(cols, Rational(0)));
    for (size_t i = 0; i < cols; ++i) basis[i][i] = 1;
    return basis;
  }
  auto piv = rref(m);
  std::vector<bool> is_pivot(cols, false);
  for (auto c : piv) is_pivot[c] = true;
  MatQ basis;
  for (size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    VecQ v(cols, Rational(0));
    v[f] = 1;
    for (size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m[r][f];
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Maximal linearly independent subset of rows, in input order.
inline MatQ row_basis(const MatQ& rows) {
  MatQ basis;
  for (const auto& r : rows) {
    MatQ trial = basis;
    trial.push_back(r);
    if (rank(trial) == trial.size()) basis.push_back(r);
  }
  return basis;
}

inline Rational determinant(MatQ m) {
  size_t n = m.size();
  Rational det(1);
  for (size_t c = 0; c < n; ++c) {
    size_t p = c;
    while (p < n && m[p][c] == 0) ++p;
    if (p == n) return Rational(0);
    if (p != c) {
      std::swap(m[p], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (size_t i = c + 1; i < n; ++i) {
      if (m[i][c] == 0) continue;
      Rational f = m[i][c] / m[c][c];
      for (size_t j = c; j < n; ++j) m[i][j] -= f * m[c][j];
    }
  }
  return det;
}

}  // namespace kstab
