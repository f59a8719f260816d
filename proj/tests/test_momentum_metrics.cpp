#include <catch_amalgamated.hpp>

#include "kstab/futaki/bounds.hpp"
#include "kstab/futaki/ruled.hpp"
#include "kstab/momentum/glue.hpp"

using namespace kstab;

namespace {

const std::pair<BoundaryClass, ClosedFormMode> class_modes[] = {
    {BoundaryClass::smooth, ClosedFormMode::smooth},
    {BoundaryClass::complete_no_sinf, ClosedFormMode::no_sinf},
    {BoundaryClass::complete_no_s0, ClosedFormMode::no_szero},
    {BoundaryClass::complete_both, ClosedFormMode::complete_both},
};

bool error_code_is(const std::function<void()>& f, ErrorCode code) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

double d(const Real& x) { return to_double(x); }

}  // namespace

TEST_CASE("solve_extremal equals the closed forms exactly", "[momentum]") {
  for (int m : {1, 3, 5, 10, 17}) {
    for (auto [bc, mode] : class_modes) {
      auto solved = solve_extremal(Rational(0), Rational(m), bc);
      auto closed = closed_form_profile(Rational(m), mode);
      INFO("m=" << m << " class=" << boundary_class_name(bc));
      CHECK(solved.numerator == closed.numerator);
      auto [sa, sb] = boundary_slopes(bc);
      CHECK(closed(Rational(0)) == 0);
      CHECK(closed(Rational(m)) == 0);
      CHECK(closed.derivative(Rational(0)) == sa);
      CHECK(closed.derivative(Rational(m)) == sb);
      auto S = scalar_curvature(closed);
      CHECK(S.is_affine());
      CHECK((S.numer - Poly<Rational>({average_scalar(S), average_scalar(S)})).integrate(Rational(0), Rational(m)) == 0);
    }
  }
  // off-origin interval
  auto p = solve_extremal(rat(1, 2), rat(7, 3), BoundaryClass::smooth);
  CHECK(p(rat(1, 2)) == 0);
  CHECK(p.derivative(rat(1, 2)) == 2);
  CHECK(p.derivative(rat(7, 3)) == -2);
  CHECK_THROWS_AS(solve_extremal(Rational(2), Rational(1), BoundaryClass::smooth), DomainError);
}

TEST_CASE("closed-form values", "[momentum]") {
  auto smooth1 = closed_form_profile(Rational(1), ClosedFormMode::smooth);
  CHECK(smooth1(rat(1, 2)) == rat(37, 78));
  auto S = scalar_curvature(smooth1);
  REQUIRE(S.is_affine());
  CHECK(S.affine() == std::pair<Rational, Rational>{rat(48, 13), rat(-18, 13)});
  // mean of S is 2 a1 / a0 with a0 = m(m+2)/2, a1 = (2-m)/2
  CHECK(average_scalar(S) == rat(2, 3));

  auto ns5 = closed_form_profile(Rational(5), ClosedFormMode::no_sinf);
  CHECK(ns5.derivative(Rational(0)) == 2);
  CHECK(ns5.derivative(Rational(5)) == 0);
  CHECK(scalar_curvature(ns5).affine().first == rat(144, 1525));

  // shifted: psi(tau) = (a+1) phi((tau - a)/(a+1)) with phi on [0, (m-a)/(a+1)]
  auto shifted = closed_form_profile(Rational(3), ClosedFormMode::no_szero_shifted, Rational(1));
  auto base = closed_form_profile(Rational(1), ClosedFormMode::no_szero);
  CHECK(shifted.a == 1);
  CHECK(shifted.b == 3);
  for (int i = 0; i <= 8; ++i) {
    Rational t = 1 + rat(i, 4);
    CHECK(shifted(t) == 2 * base((t - 1) / 2));
  }
  CHECK(scalar_curvature(shifted)(Rational(2)) == scalar_curvature(base)(rat(1, 2)) / 2);

  auto zero = zero_segment_curvature(Rational(1), Rational(4));
  CHECK(zero(Rational(3)) == rat(-1, 2));
  CHECK_FALSE(zero.is_affine());

  CHECK_THROWS_AS(closed_form_profile(Rational(0), ClosedFormMode::smooth), DomainError);
  CHECK_THROWS_AS(closed_form_profile(Rational(3), ClosedFormMode::no_szero_shifted, Rational(3)), DomainError);
}

TEST_CASE("complete-both profile is negative", "[momentum]") {
  for (int m : {1, 5, 17}) {
    auto p = closed_form_profile(Rational(m), ClosedFormMode::complete_both);
    CHECK(p(Rational(m) / 2) < 0);
    auto cert = positivity_certificate(p);
    CHECK_FALSE(cert.positive);
    CHECK(cert.order_at_a == 2);
    CHECK(cert.order_at_b == 2);
  }
}

TEST_CASE("positivity certificates flip at the thresholds", "[momentum]") {
  auto th = instability_thresholds(rat(1, 1000000));
  CHECK(positivity_certificate(closed_form_profile(Rational(18), ClosedFormMode::smooth)).positive);
  CHECK_FALSE(positivity_certificate(closed_form_profile(Rational(19), ClosedFormMode::smooth)).positive);
  CHECK(positivity_certificate(closed_form_profile(Rational(5), ClosedFormMode::no_sinf)).positive);
  CHECK_FALSE(positivity_certificate(closed_form_profile(Rational(6), ClosedFormMode::no_sinf)).positive);
  CHECK(positivity_certificate(closed_form_profile(Rational(5), ClosedFormMode::no_szero)).positive);
  CHECK_FALSE(positivity_certificate(closed_form_profile(Rational(6), ClosedFormMode::no_szero)).positive);

  for (int i = -50; i <= 50; ++i) {
    Rational m = rat(1889, 100) + rat(i, 100);
    bool pos = positivity_certificate(closed_form_profile(m, ClosedFormMode::smooth)).positive;
    INFO("m=" << m);
    CHECK(pos == (m <= th.k1.lo));
    CHECK(pos != (m > th.k1.hi));
  }
  for (int i = -50; i <= 50; ++i) {
    Rational m = rat(503, 100) + rat(i, 100);
    INFO("m=" << m);
    for (auto mode : {ClosedFormMode::no_sinf, ClosedFormMode::no_szero}) {
      bool pos = positivity_certificate(closed_form_profile(m, mode)).positive;
      CHECK(pos == (m <= th.k2.lo));
    }
  }

  auto smooth = positivity_certificate(closed_form_profile(Rational(3), ClosedFormMode::smooth));
  CHECK(smooth.order_at_a == 1);
  CHECK(smooth.end_behaviour(smooth.order_at_b) == "smooth");
  auto cusp = positivity_certificate(closed_form_profile(Rational(3), ClosedFormMode::no_sinf));
  CHECK(cusp.order_at_b == 2);
  CHECK(cusp.end_behaviour(cusp.order_at_b) == "asymptotically-hyperbolic");
}

TEST_CASE("toric-bundle coefficients match the ruled-surface expansion", "[momentum]") {
  for (int m : {3, 5, 10, 19}) {
    PiecewiseFunction<Rational> h = PiecewiseFunction<Rational>::affine(Rational(0), Rational(m), Rational(0), Rational(1));
    auto bf = toric_bundle_futaki(h, PolyQ({1, 1}), PolyQ::constant(Rational(-1)));
    auto rc = ruled_closed_coefficients(Rational(m), Rational(1), RuledMode::whole_surface);
    CHECK(bf.a0 == rc.c0);
    CHECK(bf.a1 == rc.c1);
  }
}

TEST_CASE("gluing thresholds", "[momentum]") {
  CHECK_FALSE(above_k1(Rational(18)));
  CHECK(above_k1(Rational(19)));
  CHECK(gluing_case_one(Rational(35)));
  CHECK_FALSE(gluing_case_one(Rational(36)));
  auto th = instability_thresholds(rat(1, 1000000));
  Real k2 = to_real(th.k2.midpoint());
  CHECK(d(k2 * (k2 + 2)) == Catch::Approx(35.33).margin(0.01));
  CHECK(error_code_is([] { glue_calabi_minimizer(Rational(18)); }, ErrorCode::precondition));
  CHECK(error_code_is([] { infimum_report(Rational(18)); }, ErrorCode::precondition));
}

TEST_CASE("case-1 gluing at m = 20", "[momentum]") {
  auto g = glue_calabi_minimizer(Rational(20));
  REQUIRE(g.regime == 1);
  REQUIRE(g.segments.size() == 2);
  Real c = sqrt(Real(21)) - 1;
  CHECK(abs(g.c - c) < Real(1e-40));
  CHECK(d(g.c) == Catch::Approx(3.5826).margin(1e-4));
  CHECK(abs((20 - g.c) / (g.c + 1) - g.c) < Real(1e-40));
  REQUIRE(g.junctions.size() == 1);
  CHECK(g.junctions[0].c2_mismatch() < Real(1e-9));
  CHECK(abs(g.junctions[0].scalar_jump) < Real(1e-9));
  CHECK(abs(g.phi(g.c)) < Real(1e-40));
  // S_hat agrees with 2 a1 / a0
  CHECK(abs(g.s_hat - Real(2) * Real(2 - 20) / Real(20 * 22)) < Real(1e-40));
  // S is concave: slopes decrease across the junction
  CHECK(g.curvature[0].affine().first > g.curvature[1].affine().first);

  auto h = destabilizing_function(g, 1);
  auto id = verify_futaki_identity(g, h, Real(1e-30));
  CHECK(id.residual < Real(1e-8));
  CHECK(id.lhs < 0);

  auto rep = infimum_report(g, 1);
  CHECK(rep.gap < Real(1e-6));
  CHECK(rep.calabi > 0);
  CHECK(rep.identity_residual < Real(1e-8));
  CHECK(rep.differential_factor == Catch::Approx(4 * 3.14159265358979).epsilon(1e-12));

  // the absolute lower bound from F(h) recovers the squared infimum
  Real bound = 4 * two_pi() * two_pi() * rep.futaki * rep.futaki / (rep.norm_alg * rep.norm_alg);
  CHECK(abs(bound - rep.calabi * rep.calabi) / bound < Real(1e-9));
}

TEST_CASE("exact case-1 gluing when sqrt(m+1) is rational", "[momentum]") {
  CHECK_FALSE(glue_calabi_minimizer_exact(Rational(20)).has_value());
  for (int m : {24, 35}) {
    auto g = glue_calabi_minimizer_exact(Rational(m));
    REQUIRE(g.has_value());
    INFO("m=" << m);
    for (const auto& j : g->junctions) {
      CHECK(j.phi_jump == 0);
      CHECK(j.dphi_jump == 0);
      CHECK(j.ddphi_jump == 0);
    }
    CHECK((m - g->c) / (g->c + 1) == g->c);
    CHECK(g->s_hat == Rational(2 * (2 - m)) / Rational(m * (m + 2)));
    auto h = destabilizing_function(*g, 1);
    auto bf = toric_bundle_futaki(h, PolyQ({1, 1}), PolyQ::constant(Rational(-1)));
    auto T = calabi_norm(*g).tau_integral_exact;
    REQUIRE_FALSE(T.has_logs());
    REQUIRE(bf.exact_futaki().has_value());
    CHECK(*bf.exact_futaki() == -T.rational / 2);
    CHECK(*bf.exact_norm_sq() == T.rational);
  }
}

TEST_CASE("case-2 gluing and refinement", "[momentum]") {
  for (int m : {36, 40}) {
    INFO("m=" << m);
    auto g = glue_calabi_minimizer(Rational(m));
    REQUIRE(g.regime == 2);
    REQUIRE(g.segments.size() == 3);
    Real k2 = g.segments[0].b;
    CHECK(g.c > k2);
    CHECK(abs(g.c - (Real(m + 1) / (k2 + 1) - 1)) < Real(1e-40));
    for (const auto& j : g.junctions) CHECK(j.c2_mismatch() < Real(1e-9));
    CHECK(abs(g.scalar((k2 + g.c) / 2) + 2 / (1 + (k2 + g.c) / 2)) < Real(1e-40));

    std::vector<InfimumReport> ladder;
    for (int r = 1; r <= 16; r *= 2) ladder.push_back(infimum_report(g, r));
    CHECK(ladder.back().gap < Real(1e-4));
    for (size_t i = 1; i < ladder.size(); ++i) {
      CHECK(ladder[i].gap < ladder[i - 1].gap);
      CHECK(ladder[i].bound <= ladder[i].calabi * (1 + Real(1e-12)));
    }
    for (const auto& r : ladder) CHECK(r.identity_residual < Real(1e-8));
  }
  // a long plateau needs several doublings
  auto sweep = infimum_sweep(Rational(100), Real(1e-4));
  REQUIRE(sweep.size() == 3);
  CHECK(sweep.back().refine == 4);
  CHECK(sweep.back().gap < Real(1e-4));
  CHECK(sweep[1].gap >= Real(1e-4));
}

TEST_CASE("Futaki identity hypothesis and trivial cases", "[momentum]") {
  auto p = closed_form_profile(Rational(1), ClosedFormMode::smooth);
  auto g = as_glued(p, Rational(1));
  auto constant = PiecewiseFunction<Rational>::affine(Rational(0), Rational(1), Rational(3), Rational(0));
  auto id0 = verify_futaki_identity(g, constant);
  CHECK(id0.lhs == 0);
  CHECK(id0.rhs == 0);
  auto affine = PiecewiseFunction<Rational>::affine(Rational(0), Rational(1), Rational(-1), Rational(2));
  auto id1 = verify_futaki_identity(g, affine);
  CHECK(id1.residual < Real(1e-40));
  CHECK(id1.lhs != 0);

  PiecewiseFunction<Rational> kinked({{Rational(0), rat(1, 2), PolyQ({0, 1}), 0}, {rat(1, 2), Rational(1), PolyQ({1, -1}), 0}});
  CHECK(error_code_is([&] { verify_futaki_identity(g, kinked); }, ErrorCode::precondition));
  PiecewiseFunction<Rational> curved({{Rational(0), Rational(1), PolyQ({0, 0, 1}), 0}});
  CHECK(error_code_is([&] { verify_futaki_identity(g, curved); }, ErrorCode::precondition));
}

TEST_CASE("Calabi norm", "[momentum]") {
  auto g = as_glued(closed_form_profile(Rational(1), ClosedFormMode::smooth), Rational(1));
  auto n = calabi_norm(g);
  // S - S_hat = (48 tau - 18)/13 - 2/3 = (144 tau - 80)/39
  Rational expect = (PolyQ({-80, 144}) * PolyQ({-80, 144}) * PolyQ({1, 1})).integrate(Rational(0), Rational(1)) / (39 * 39);
  REQUIRE_FALSE(n.tau_integral_exact.has_logs());
  CHECK(n.tau_integral_exact.rational == expect);
  CHECK(abs(n.quadrature - n.tau_integral) < Real(1e-12));
  CHECK(abs(n.full_norm_sq - two_pi() * two_pi() * to_real(expect)) < Real(1e-40));
  // the extremal metric attains the relative bound with F_chi = 0
  CHECK(abs(calabi_lower_bound(Rational(0), Real(1), n.full_norm, true) - n.full_norm_sq) < Real(1e-40));

  // S identically zero: (1 + tau) phi = 2 tau (m - tau)
  MomentumProfile<Rational> flat{Rational(0), Rational(4), PolyQ({0, 8, -2}), BoundaryClass::smooth};
  auto z = calabi_norm(as_glued(flat, Rational(4)));
  CHECK(z.tau_integral_exact.rational == 0);
  CHECK(z.full_norm == 0);

  auto glued = calabi_norm(glue_calabi_minimizer(Rational(20)));
  CHECK(glued.full_norm > 0);
  CHECK(abs(glued.quadrature - glued.tau_integral) < Real(1e-10));
  auto plateau = calabi_norm(glue_calabi_minimizer(Rational(40)));
  CHECK(plateau.tau_integral_exact.has_logs());
  CHECK(abs(plateau.quadrature - plateau.tau_integral) < Real(1e-10));
}

TEST_CASE("profile sampling", "[momentum]") {
  auto g = as_glued(closed_form_profile(Rational(17), ClosedFormMode::smooth), Rational(17));
  auto rows = sample_profile(g, 3);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].tau == 0);
  CHECK(rows[1].tau == 8.5);
  CHECK(rows[2].tau == 17);
  CHECK(rows[0].phi == 0);
  CHECK(rows[2].phi == 0);
  CHECK(sample_profile(g, 2).size() == 2);
  CHECK_THROWS_AS(sample_profile(g, 1), DomainError);

  auto glued = glue_calabi_minimizer(Rational(20));
  auto gr = sample_profile(glued, 5);
  REQUIRE(gr.size() == 6);
  bool found = false;
  for (size_t i = 0; i < gr.size(); ++i) {
    if (i > 0) CHECK(gr[i].tau > gr[i - 1].tau);
    if (std::abs(gr[i].tau - d(glued.c)) < 1e-15) {
      found = true;
      CHECK(std::abs(gr[i].phi) < 1e-15);
    }
  }
  CHECK(found);
}
