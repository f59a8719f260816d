#pragma once

#include <vector>

#include "kstab/core/linalg.hpp"

namespace kstab::lp {

enum class Relation { le, ge, eq };
enum class Status { optimal, infeasible, unbounded };

struct Row {
  VecQ coeffs;
  Relation rel = Relation::le;
  Rational rhs;
};

/// minimize c.x subject to rows, x >= 0.
struct Problem {
  size_t num_vars = 0;
  VecQ objective;
  std::vector<Row> rows;

  void add(VecQ a, Relation rel, Rational b) { rows.push_back({std::move(a), rel, std::move(b)}); }
};

struct Solution {
  Status status = Status::infeasible;
  VecQ x;
  Rational value;
  size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  // t_ rows: constraint rows then objective row; last column is the rhs
  std::vector<VecQ> t;
  std::vector<size_t> basis;
  size_t cols = 0;  // structural + slack + artificial
  size_t pivots = 0;

  void pivot(size_t r, size_t c) {
    ++pivots;
    Rational inv = Rational(1) / t[r][c];
    VecQ& pr = t[r];
    std::vector<size_t> nz;
    for (size_t j = 0; j <= cols; ++j) {
      if (pr[j] != 0) {
        pr[j] *= inv;
        nz.push_back(j);
      }
    }
    for (size_t i = 0; i < t.size(); ++i) {
      if (i == r || t[i][c] == 0) continue;
      Rational f = t[i][c];
      for (size_t j : nz) t[i][j] -= f * pr[j];
    }
    basis[r] = c;
  }

  /// Runs simplex on objective row `obj` over allowed columns. Returns false if unbounded.
  bool run(size_t obj, const std::vector<bool>& allowed) {
    size_t m = basis.size();
    int degenerate_streak = 0;
    bool bland = false;
    for (;;) {
      size_t enter = cols;
      Rational best(0);
      for (size_t j = 0; j < cols; ++j) {
        if (!allowed[j] || t[obj][j] >= 0) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (t[obj][j] < best) {
          best = t[obj][j];
          enter = j;
        }
      }
      if (enter == cols) return true;
      size_t leave = m;
      Rational ratio;
      for (size_t i = 0; i < m; ++i) {
        if (t[i][enter] <= 0) continue;
        Rational q = t[i][cols] / t[i][enter];
        if (leave == m || q < ratio || (q == ratio && basis[i] < basis[leave])) {
          leave = i;
          ratio = q;
        }
      }
      if (leave == m) return false;
      if (ratio == 0) {
        if (++degenerate_streak > 64) bland = true;
      } else {
        degenerate_streak = 0;
      }
      pivot(leave, enter);
    }
  }
};

}  // namespace detail

/// Two-phase dense simplex over exact rationals (Dantzig pricing, Bland's rule after long degenerate runs).
inline Solution solve(const Problem& p) {
  const size_t n = p.num_vars;
  const size_t m = p.rows.size();
  size_t num_slack = 0, num_art = 0;
  std::vector<Row> rows = p.rows;
  for (auto& r : rows) {
    if (r.coeffs.size() != n) throw Error(ErrorCode::internal, "lp: row width mismatch");
    if (r.rhs < 0) {
      for (auto& v : r.coeffs) v = -v;
      r.rhs = -r.rhs;
      if (r.rel == Relation::le) r.rel = Relation::ge;
      else if (r.rel == Relation::ge) r.rel = Relation::le;
    }
    if (r.rel != Relation::eq) ++num_slack;
    if (r.rel != Relation::le) ++num_art;
  }
  detail::Tableau tab;
  tab.cols = n + num_slack + num_art;
  const size_t cols = tab.cols;
  tab.t.assign(m + 2, VecQ(cols + 1, Rational(0)));
  tab.basis.assign(m, 0);
  size_t s = n, a = n + num_slack;
  std::vector<bool> is_art(cols, false);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) tab.t[i][j] = rows[i].coeffs[j];
    tab.t[i][cols] = rows[i].rhs;
    if (rows[i].rel == Relation::le) {
      tab.t[i][s] = 1;
      tab.basis[i] = s++;
    } else {
      if (rows[i].rel == Relation::ge) tab.t[i][s++] = -1;
      tab.t[i][a] = 1;
      is_art[a] = true;
      tab.basis[i] = a++;
    }
  }
  const size_t obj = m, phase1 = m + 1;
  for (size_t j = 0; j < n; ++j) tab.t[obj][j] = p.objective[j];
  // phase-one objective: sum of artificials, expressed in nonbasic terms
  for (size_t i = 0; i < m; ++i) {
    if (!is_art[tab.basis[i]]) continue;
    for (size_t j = 0; j <= cols; ++j)
      if (!is_art[j]) tab.t[phase1][j] -= tab.t[i][j];
  }
  std::vector<bool> all(cols, true);
  Solution sol;
  if (num_art > 0) {
    tab.run(phase1, all);
    if (tab.t[phase1][cols] != 0) {
      sol.status = Status::infeasible;
      sol.pivots = tab.pivots;
      return sol;
    }
    // drive remaining zero-level artificials out of the basis
    for (size_t i = 0; i < m; ++i) {
      if (!is_art[tab.basis[i]]) continue;
      for (size_t j = 0; j < cols; ++j) {
        if (!is_art[j] && tab.t[i][j] != 0) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }
  // objective row in terms of the current basis
  for (size_t i = 0; i < m; ++i) {
    size_t b = tab.basis[i];
    if (tab.t[obj][b] == 0) continue;
    Rational f = tab.t[obj][b];
    for (size_t j = 0; j <= cols; ++j) tab.t[obj][j] -= f * tab.t[i][j];
  }
  std::vector<bool> allowed(cols);
  for (size_t j = 0; j < cols; ++j) allowed[j] = !is_art[j];
  if (!tab.run(obj, allowed)) {
    sol.status = Status::unbounded;
    sol.pivots = tab.pivots;
    return sol;
  }
  sol.status = Status::optimal;
  sol.x.assign(n, Rational(0));
  for (size_t i = 0; i < m; ++i)
    if (tab.basis[i] < n) sol.x[tab.basis[i]] = tab.t[i][cols];
  sol.value = dot(p.objective, sol.x);
  sol.pivots = tab.pivots;
  return sol;
}

}  // namespace kstab::lp
