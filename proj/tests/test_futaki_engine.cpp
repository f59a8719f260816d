#include <catch_amalgamated.hpp>

#include <random>

#include "kstab/futaki/bounds.hpp"
#include "kstab/futaki/normal_cone.hpp"
#include "kstab/futaki/ruled.hpp"

using namespace kstab;

namespace {

const RuledMode all_modes[] = {RuledMode::whole_surface, RuledMode::pair_s_infinity, RuledMode::pair_s_zero};

bool error_code_is(const std::function<void()>& f, ErrorCode code) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_CASE("Futaki invariant from asymptotics", "[futaki]") {
  WeightAsymptotics w{2, rat(15, 2), rat(-1, 2), rat(-2, 3), Rational(0), std::nullopt};
  CHECK(futaki(w) == rat(2, 45));

  WeightAsymptotics zero{2, rat(15, 2), rat(-1, 2), Rational(0), Rational(0), Rational(0)};
  auto p = futaki_and_products(zero);
  CHECK(p.futaki == 0);
  CHECK(*p.norm_sq == 0);

  WeightAsymptotics bad{2, Rational(0), Rational(1), Rational(1), Rational(1), std::nullopt};
  CHECK_THROWS_AS(futaki(bad), DomainError);
}

TEST_CASE("lifting invariance", "[futaki]") {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> d(-20, 20);
  for (int i = 0; i < 50; ++i) {
    WeightAsymptotics a{2, rat(1 + std::abs(d(rng)), 1 + std::abs(d(rng))), rat(d(rng), 7), rat(d(rng), 3), rat(d(rng), 5),
                        rat(std::abs(d(rng)) + 40, 1)};
    WeightAsymptotics b = a;
    b.a0 = rat(d(rng), 11);
    b.a1 = rat(d(rng), 2);
    b.trace_sq = rat(std::abs(d(rng)) + 60, 1);
    Rational tab = rat(d(rng), 13);
    Rational s = rat(d(rng), 1 + std::abs(d(rng)));
    auto la = a.lifted(s);
    CHECK(la.a0 == a.a0 + s * a.c0);
    CHECK(la.a1 == a.a1 + s * a.c1);
    CHECK(futaki(la) == futaki(a));
    // Tr((A + ksI) B) gains s b0 at top order
    CHECK(inner_product(la, b, tab + s * b.a0) == inner_product(a, b, tab));
    CHECK(*norm_sq(la) == *norm_sq(a));
    CHECK(inner_product(a, b, tab) == inner_product(b, a, tab));
  }
}

TEST_CASE("relative Futaki needs a nondegenerate torus", "[futaki]") {
  WeightAsymptotics a{2, Rational(2), Rational(1), Rational(1), Rational(0), Rational(3)};
  WeightAsymptotics b{2, Rational(2), Rational(1), Rational(2), Rational(0), Rational(2)};  // <b,b> = 2 - 4/2 = 0
  CHECK(error_code_is([&] { futaki_and_products(a, TorusGenerator{b, Rational(1)}); }, ErrorCode::precondition));
}

TEST_CASE("brute-force tables", "[ruled]") {
  auto t = ruled_bruteforce_tables(Rational(3), Rational(1), {4});
  CHECK(t.dim[0] == 117);
  CHECK_THROWS_AS(ruled_bruteforce_tables(Rational(3), rat(1, 2), {3}), DomainError);
  CHECK_THROWS_AS(ruled_bruteforce_tables(Rational(3), Rational(3), {1}), DomainError);
  CHECK_THROWS_AS(ruled_bruteforce_tables(Rational(3), Rational(0), {1}), DomainError);
}

TEST_CASE("brute-force fits reproduce the closed-form coefficients", "[ruled]") {
  struct Case {
    Rational m;
    std::vector<Rational> cs;
  };
  std::vector<Case> cases{{Rational(3), {Rational(1), rat(3, 2), Rational(2)}},
                          {Rational(5), {Rational(1), rat(5, 2), Rational(4)}},
                          {Rational(10), {Rational(3), rat(7, 2)}},
                          {Rational(19), {rat(7, 2), Rational(10)}}};
  for (const auto& cs : cases)
    for (const auto& c : cs.cs)
      for (auto mode : all_modes)
        for (long first : {1L, 3L}) {
          auto ks = admissible_ks(cs.m, c, 6, first);
          auto fit = fit_ruled_tables(ruled_bruteforce_tables(cs.m, c, ks, mode));
          auto cl = ruled_closed_coefficients(cs.m, c, mode);
          INFO("m=" << to_string(cs.m) << " c=" << to_string(c) << " mode=" << ruled_mode_name(mode));
          CHECK(fit.exact);
          CHECK(fit.dim.coeff(2) == cl.c0);
          CHECK(fit.dim.coeff(1) == cl.c1);
          CHECK(fit.tr_a.coeff(3) == cl.a0);
          CHECK(fit.tr_a.coeff(2) == cl.a1);
          CHECK(fit.tr_b.coeff(3) == cl.b0);
          CHECK(fit.tr_b.coeff(2) == cl.b1);
          CHECK(fit.tr_ab.coeff(4) == cl.ab0);
          CHECK(fit.tr_bb.coeff(4) == cl.bb0);
          // the tables carry a genuine norm
          auto prod = futaki_and_products(fit.alpha, TorusGenerator{fit.beta, fit.trace_cross});
          CHECK(*prod.norm_sq >= 0);
          CHECK(*prod.torus_norm_sq > 0);
          CHECK(*prod.relative_norm_sq >= 0);
          CHECK(*prod.relative_futaki * ruled_closed_form_scale(cs.m, mode) == ruled_relative_futaki(cs.m, c, mode));
        }
}

TEST_CASE("closed forms against the definition", "[ruled]") {
  for (int mi = 1; mi <= 25; ++mi)
    for (int cn = 1; cn < 4 * mi; cn += 3) {
      Rational m(mi), c = rat(cn, 4);
      for (auto mode : all_modes) {
        Rational def = ruled_relative_futaki_from_coefficients(ruled_closed_coefficients(m, c, mode));
        CHECK(ruled_relative_futaki(m, c, mode) == ruled_closed_form_scale(m, mode) * def);
      }
    }
  // whole-surface scale is c0
  CHECK(ruled_closed_form_scale(Rational(3), RuledMode::whole_surface) == rat(15, 2));
  CHECK(ruled_closed_form_scale(Rational(3), RuledMode::pair_s_infinity) == 1);
}

TEST_CASE("ruled relative Futaki examples", "[ruled]") {
  CHECK(ruled_bracket(Rational(19), RuledMode::whole_surface)(rat(7, 2)) == rat(-11, 2));
  CHECK(ruled_relative_futaki(Rational(19), rat(7, 2), RuledMode::whole_surface) < 0);
  Rational m(10);
  Rational b = -(m * m - 4 * m - 6), a = 2 * m + 2, c0 = m * m + 6 * m + 6;
  CHECK(b * b - 4 * a * c0 == Rational(54 * 54 - 4 * 22 * 166));
  CHECK(b * b - 4 * a * c0 < 0);
  CHECK_FALSE(destabilizing_c(Rational(10), RuledMode::whole_surface));
  CHECK_FALSE(destabilizing_c(Rational(18), RuledMode::whole_surface));
  auto w = destabilizing_c(Rational(19), RuledMode::whole_surface);
  REQUIRE(w);
  CHECK(*w > 0);
  CHECK(*w < 19);
  CHECK(ruled_relative_futaki(Rational(19), *w, RuledMode::whole_surface) < 0);
  // prefactor c(m-c) drives the value to 0 at both ends
  for (auto mode : all_modes) {
    CHECK(abs(ruled_relative_futaki(Rational(19), rat(1, 1000000), mode)) < rat(1, 10000));
    Rational near = abs(ruled_relative_futaki(Rational(19), Rational(19) - rat(1, 1000000), mode));
    Rational nearer = abs(ruled_relative_futaki(Rational(19), Rational(19) - rat(1, 1000000000), mode));
    CHECK(nearer * 500 < near);
  }
  CHECK_THROWS_AS(ruled_relative_futaki(Rational(3), Rational(3), RuledMode::whole_surface), DomainError);
  CHECK_THROWS_AS(ruled_relative_futaki(Rational(3), Rational(-1), RuledMode::pair_s_zero), DomainError);
  // pair thresholds sit at k2
  CHECK_FALSE(destabilizing_c(Rational(5), RuledMode::pair_s_infinity));
  CHECK(destabilizing_c(Rational(6), RuledMode::pair_s_infinity));
}

TEST_CASE("sign flip across k1 on a fine grid", "[ruled]") {
  auto th = instability_thresholds(rat(1, 1000000));
  for (int i = -20; i <= 20; ++i) {
    Rational m = rat(18889, 1000) + rat(i, 100);
    if (m > th.k1.lo && m <= th.k1.hi) continue;
    bool unstable = destabilizing_c(m, RuledMode::whole_surface).has_value();
    CHECK(unstable == (m > th.k1.hi));
  }
}

TEST_CASE("pair nondegeneracy", "[ruled]") {
  auto n5 = pair_nondegeneracy(Rational(5), RuledMode::pair_s_infinity);
  CHECK(n5.relative_condition);
  CHECK_FALSE(n5.scalar_condition);
  auto n6 = pair_nondegeneracy(Rational(6), RuledMode::pair_s_infinity);
  CHECK_FALSE(n6.relative_condition);
  CHECK(n6.c1_over_c0 == rat(-5, 48));
  auto s0 = pair_nondegeneracy(Rational(3), RuledMode::pair_s_zero);
  CHECK(s0.alpha2_over_alpha1 == rat(-1, 4));
  CHECK(s0.c1_over_c0 == rat(-5, 15));
  CHECK(s0.scalar_condition);
  CHECK_THROWS_AS(pair_nondegeneracy(Rational(3), RuledMode::whole_surface), DomainError);
}

TEST_CASE("instability thresholds", "[ruled]") {
  auto th = instability_thresholds(rat(1, 10000));
  CHECK(th.k1_positive_roots == 1);
  CHECK(th.k2_positive_roots == 1);
  CHECK(th.k1.lo >= rat(18888, 1000));
  CHECK(th.k1.hi <= rat(18890, 1000));
  CHECK(th.k2.lo >= rat(5027, 1000));
  CHECK(th.k2.hi <= rat(5028, 1000));
  CHECK(SturmIsolator(k1_quartic()).count_open(Rational(0), Rational(1000)) == 1);
  CHECK_THROWS_AS(instability_thresholds(Rational(0)), DomainError);
}

TEST_CASE("normal cone Futaki matches the asymptotics path", "[normal-cone]") {
  CHECK(normal_cone_futaki(ruled_surface_data(Rational(3)), Rational(1)) == rat(2, 45));
  int count = 0;
  for (int mi : {3, 4, 5, 7, 10})
    for (Rational c : {rat(1, 2), Rational(1), rat(3, 2), rat(5, 2)}) {
      Rational m(mi);
      auto fit = fit_ruled_tables(ruled_bruteforce_tables(m, c, admissible_ks(m, c, 6)));
      CHECK(fit.exact);
      CHECK(normal_cone_futaki(ruled_surface_data(m), c) == futaki(fit.alpha));
      ++count;
    }
  CHECK(count == 20);
}

TEST_CASE("normal cone Futaki edge cases", "[normal-cone]") {
  auto d = ruled_surface_data(Rational(5));
  // F(0) = 0 and F'(0) = alpha1(0) / 2: sample the exact cubic in c
  std::vector<Rational> cs{rat(1, 10), rat(1, 5), rat(3, 10), rat(2, 5)}, fs;
  for (auto& c : cs) fs.push_back(normal_cone_futaki(d, c));
  PolyQ F = lagrange_fit(cs, fs);
  CHECK(F.coeff(0) == 0);
  CHECK(F.coeff(1) == d.lz / 2);

  SurfaceDivisorData flat{Rational(-1), Rational(2), Rational(5), Rational(0), Rational(1), Rational(0)};
  CHECK(normal_cone_futaki(flat, rat(1, 3)) == rat(1, 6) * 2);

  SurfaceDivisorData bad = d;
  bad.ll = 0;
  CHECK_THROWS_AS(normal_cone_futaki(bad, Rational(1)), DomainError);
  CHECK_THROWS_AS(normal_cone_futaki(d, Rational(2), Rational(2)), DomainError);
  CHECK_THROWS_AS(normal_cone_futaki(d, Rational(0)), DomainError);
}

TEST_CASE("Calabi lower bound", "[bounds]") {
  Real tp = two_pi();
  CHECK(abs(calabi_lower_bound(Rational(-1), Real(1), Real(0), false) - 4 * tp * tp) < Real("1e-40"));
  CHECK(calabi_lower_bound(Rational(0), Real(2), Real(3), true) == 9);
  CHECK(abs(calabi_lower_bound(rat(-1, 2), Real(2), Real(1), true) - (2 * tp * tp / 16 + 1)) < Real("1e-40"));
  CHECK(error_code_is([] { calabi_lower_bound(Rational(0), Real(1), Real(0), false); }, ErrorCode::precondition));
  CHECK(error_code_is([] { calabi_lower_bound(Rational(1), Real(1), Real(0), true); }, ErrorCode::precondition));
}
