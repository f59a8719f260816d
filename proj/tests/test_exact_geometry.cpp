#include <catch_amalgamated.hpp>

#include <random>

#include "kstab/core/poly.hpp"
#include "kstab/geometry/io.hpp"
#include "kstab/geometry/lattice.hpp"
#include "kstab/geometry/mesh.hpp"
#include "oracles/newton_cotes.hpp"

using namespace kstab;

namespace {

RationalPolygon square() { return RationalPolygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }
RationalPolygon std_triangle() { return RationalPolygon({{0, 0}, {1, 0}, {0, 1}}); }

std::vector<oracle::Pt> pts(const RationalPolygon& P) {
  std::vector<oracle::Pt> out;
  for (const auto& v : P.vertices()) out.push_back({v.x, v.y});
  return out;
}

Rational Q(const char* s) { return parse_rational(s); }

}  // namespace

TEST_CASE("rational parsing and printing", "[rational]") {
  CHECK(parse_rational("6/4") == rat(3, 2));
  CHECK(to_string(parse_rational("6/4")) == "3/2");
  CHECK(parse_rational("-1.25") == rat(-5, 4));
  CHECK(parse_rational("3e-2") == rat(3, 100));
  CHECK(parse_rational("7") == Rational(7));
  CHECK_THROWS_AS(parse_rational("1/0"), ParseError);
  CHECK_THROWS_AS(parse_rational("abc"), ParseError);
  CHECK(denom(rat(-2, -4)) == 2);
  CHECK(simplest_between(rat(1, 3) - rat(1, 1000), rat(1, 3) + rat(1, 1000)) == rat(1, 3));
  CHECK(simplest_between(rat(-7, 5), rat(-6, 5)) == rat(-4, 3));
  CHECK(simplest_between(rat(-3, 2), rat(-1, 2)) == Rational(-1));
}

TEST_CASE("edge measure density", "[polygon]") {
  auto sq = square();
  for (const auto& e : sq.edges()) {
    CHECK(e.density_sq == 1);
    CHECK(e.lattice_length == 1);
  }
  CHECK(sq.boundary_measure() == 4);

  auto tri = std_triangle();
  CHECK(tri.edges()[1].normal.x == 1);
  CHECK(tri.edges()[1].normal.y == 1);
  CHECK(tri.edges()[1].density_sq == rat(1, 2));
  CHECK(tri.edges()[1].lattice_length == 1);
  CHECK(tri.boundary_measure() == 3);

  RationalPolygon big({{0, 0}, {2, 0}, {0, 2}});
  CHECK(big.boundary_measure() == 6);

  // rational vertices: lattice length of (0,0)->(1/2,1/3) is 1/6 along primitive (3,2)
  RationalPolygon thin({{0, 0}, {Q("1/2"), Q("1/3")}, {0, 1}});
  CHECK(thin.edges()[0].lattice_length == rat(1, 6));
  CHECK(thin.edges()[0].density_sq == rat(1, 13));
  for (const auto& e : thin.edges()) CHECK(bmp::gcd(e.normal.x, e.normal.y) == 1);
}

TEST_CASE("polygon validation", "[polygon]") {
  CHECK_THROWS_MATCHES(RationalPolygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::clockwise; }));
  CHECK_THROWS_MATCHES(RationalPolygon({{0, 0}, {1, 0}, {2, 0}, {0, 1}}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::validation; }));
  CHECK_THROWS_MATCHES(RationalPolygon({{0, 0}, {2, 0}, {1, Q("1/4")}, {2, 2}, {0, 2}}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::validation; }));
  CHECK_THROWS(RationalPolygon({{0, 0}, {1, 0}}));

  json j = json::parse(R"({"vertices": [[0,1,0,1],[1,1,0,1],[1,1,1,1],[0,1,1,1]]})");
  CHECK(polygon_from_json(j).area() == 1);
  json cw = json::parse(R"({"vertices": [[0,1,0,1],[0,1,1,1],[1,1,1,1],[1,1,0,1]]})");
  try {
    polygon_from_json(cw);
    FAIL("clockwise accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::clockwise);
  }
  CHECK_THROWS_AS(polygon_from_json(json::parse(R"({"vertices": [[0,0,0,1]]})")), ParseError);
  auto round = polygon_from_json(polygon_to_json(RationalPolygon({{0, 0}, {Q("3/2"), 0}, {0, Q("2/7")}})));
  CHECK(round.vertices()[2].y == rat(2, 7));
}

TEST_CASE("integrate PL functions exactly", "[integrate]") {
  auto P = square();
  auto mesh = std::make_shared<GridMesh>(P, 2);
  auto f = PLFunction::sample(mesh, [](const Vec2& p) { return std::max(Rational(p.x - rat(1, 2)), Rational(0)); });
  CHECK(f.is_convex());
  CHECK(integrate(f, Region::interior) == rat(1, 8));
  CHECK(integrate(f, Region::boundary) == rat(3, 4));

  auto zero = PLFunction::sample(mesh, [](const Vec2&) { return Rational(0); });
  CHECK(integrate(zero, Region::interior) == 0);
  CHECK(integrate(zero, Region::boundary) == 0);

  // oracle values for the same function, with weights of degree <= 2
  auto g = [](const Rational& x, const Rational&) { return std::max(Rational(x - rat(1, 2)), Rational(0)); };
  oracle::SlabProblem pr{pts(P), g, {rat(1, 2)}, {}};
  CHECK(oracle::integrate(pr) == rat(1, 8));
  auto breaks = [](const oracle::Pt& a, const oracle::Pt& b) {
    std::vector<Rational> t;
    if (a.x != b.x) t.push_back((rat(1, 2) - a.x) / (b.x - a.x));
    return t;
  };
  CHECK(oracle::boundary(pts(P), {1, 1, 1, 1}, g, breaks) == rat(3, 4));

  Poly2Q w = Poly2Q::affine(1, 2, -1) * Poly2Q::y() + Poly2Q::monomial(3, 2, 0);
  auto gw = [&](const Rational& x, const Rational& y) { return g(x, y) * w(x, y); };
  oracle::SlabProblem prw{pts(P), gw, {rat(1, 2)}, {}};
  CHECK(integrate(f, Region::interior, w) == oracle::integrate(prw));
  CHECK(integrate(f, Region::boundary, w) == oracle::boundary(pts(P), {1, 1, 1, 1}, gw, breaks));

  CHECK_THROWS_MATCHES(integrate(f, Region::interior, Poly2Q::monomial(1, 5, 0)), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::unsupported_degree; }));
}

TEST_CASE("integrate is linear, refinement-stable and positive on convex functions", "[integrate]") {
  RationalPolygon P({{0, 0}, {3, 0}, {4, 2}, {1, 3}, {-1, 1}}, {1, 2, rat(1, 2), 1, 3});
  auto mesh = std::make_shared<GridMesh>(P, 2);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(-4, 4);
  for (int trial = 0; trial < 10; ++trial) {
    MaxAffine h({{d(rng), d(rng), d(rng)}, {d(rng), d(rng), d(rng)}, {0, 0, 0}});
    MaxAffine k({{d(rng), d(rng), d(rng)}, {0, 0, 0}});
    auto f = PLFunction::sample(mesh, h);
    auto g = PLFunction::sample(mesh, k);
    Rational a(d(rng)), b(d(rng));
    for (auto region : {Region::interior, Region::boundary}) {
      Poly2Q w = Poly2Q::affine(2, 1, 1);
      CHECK(integrate(a * f + b * g, region, w) == a * integrate(f, region, w) + b * integrate(g, region, w));
      CHECK(integrate(f, region, w + w) == 2 * integrate(f, region, w));
      auto fine = f.refined();
      CHECK(fine.resolution() == 4);
      CHECK(integrate(fine, region, w) == integrate(f, region, w));
      if (f.is_convex()) CHECK(integrate(f, region) >= 0);
    }
  }
}

TEST_CASE("MaxAffine integrals agree with the slab oracle", "[integrate]") {
  RationalPolygon P({{0, 0}, {2, 0}, {3, 1}, {3, 2}, {1, 2}, {0, 1}}, {rat(37, 4), 2, 2, rat(37, 4), 2, 2});
  // f = max(x - y - 1/2, 0): crease y = x - 1/2
  Affine l{rat(-1, 2), 1, -1};
  auto f = MaxAffine::simple(l);
  auto g = [&](const Rational& x, const Rational& y) { return std::max(l({x, y}), Rational(0)); };
  oracle::SlabProblem pr{pts(P), g, {}, {{Rational(1), rat(-1, 2)}}};
  CHECK(f.integrate_interior(P, Poly2Q::constant(1)) == oracle::integrate(pr));
  auto g2 = [&](const Rational& x, const Rational& y) { return g(x, y) * g(x, y); };
  oracle::SlabProblem pr2{pts(P), g2, {}, {{Rational(1), rat(-1, 2)}}};
  CHECK(f.integrate_interior(P, Poly2Q::constant(1), 2) == oracle::integrate(pr2));
  auto breaks = [&](const oracle::Pt& a, const oracle::Pt& b) {
    std::vector<Rational> t;
    Rational la = l({a.x, a.y}), lb = l({b.x, b.y});
    if (la != lb) t.push_back(la / (la - lb));
    return t;
  };
  CHECK(f.integrate_boundary(P, Poly2Q::constant(1)) == oracle::boundary(pts(P), P.weights(), g, breaks));

  // tie along an edge counts once
  auto sq = square();
  MaxAffine tie({{1, 1, 0}, {1, 0, 0}});
  CHECK(tie.integrate_boundary(sq, Poly2Q::constant(1)) == rat(1) + rat(3, 2) + 2 + rat(3, 2));
}

TEST_CASE("grid mesh structure", "[mesh]") {
  auto sq = square();
  for (int N : {1, 2, 4, 8}) {
    GridMesh M(sq, N);
    CHECK(M.nodes().size() == static_cast<size_t>((N + 1) * (N + 1)));
    CHECK(M.triangles().size() == static_cast<size_t>(2 * N * N));
    CHECK(M.boundary_segments().size() == static_cast<size_t>(4 * N));
    Rational area(0);
    for (const auto& t : M.triangles()) area += orient(M.nodes()[t.v[0]], M.nodes()[t.v[1]], M.nodes()[t.v[2]]) / 2;
    CHECK(area == 1);
  }
  GridMesh T(std_triangle(), 4);
  CHECK(T.nodes().size() == 15u);
  CHECK(T.nodes()[T.node_nearest_barycenter()] == Vec2{rat(1, 4), rat(1, 4)});
  // a non-convex PL function is flagged
  auto mesh = std::make_shared<GridMesh>(sq, 2);
  auto bump = PLFunction::sample(mesh, [](const Vec2& p) { return p == Vec2{rat(1, 2), rat(1, 2)} ? Rational(1) : Rational(0); });
  CHECK_FALSE(bump.is_convex());
}

TEST_CASE("lattice sum expansion", "[lattice]") {
  auto sq = square();
  auto one = Poly2Q::constant(1);
  auto ex = lattice_sum_expansion(sq, one, {1, 2, 3, 4, 5});
  for (size_t i = 0; i < ex.ks.size(); ++i) CHECK(ex.sums[i] == Rational((ex.ks[i] + 1) * (ex.ks[i] + 1)));
  CHECK(ex.leading == 1);
  CHECK(ex.subleading == 2);
  CHECK(ex.exact_fit);

  auto tri = std_triangle();
  auto et = lattice_sum_expansion(tri, one, {1, 2, 3});
  CHECK(et.leading == rat(1, 2));
  CHECK(et.subleading == rat(3, 2));

  auto ez = lattice_sum_expansion(tri, Poly2Q(), {1, 2, 3});
  CHECK(ez.leading == 0);
  CHECK(ez.subleading == 0);

  CHECK_THROWS_MATCHES(lattice_sum_expansion(sq, Poly2Q::monomial(1, 2, 0), {1, 2, 3, 4}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::arity; }));
  CHECK_THROWS_AS(lattice_sum_expansion(RationalPolygon({{0, 0}, {rat(1, 2), 0}, {0, 1}}), one, {1, 2, 3}), DomainError);
}

TEST_CASE("lattice expansion matches integrals for degree <= 2 weights", "[lattice]") {
  std::vector<RationalPolygon> polys{square(), std_triangle(), RationalPolygon({{0, 0}, {3, 0}, {4, 2}, {1, 3}, {-1, 1}}),
                                     RationalPolygon({{0, 0}, {2, 1}, {1, 3}})};
  std::vector<Poly2Q> weights{Poly2Q::constant(1), Poly2Q::x(), Poly2Q::monomial(1, 2, 0),
                              Poly2Q::affine(1, -2, 3) + Poly2Q::monomial(2, 1, 1) + Poly2Q::monomial(-1, 0, 2)};
  for (const auto& P : polys)
    for (const auto& w : weights) {
      auto ex = lattice_sum_expansion(P, w, {1, 2, 3, 4, 5, 6});
      CHECK(ex.exact_fit);
      CHECK(ex.leading == integrate_interior(P, w));
      CHECK(ex.subleading == integrate_boundary(P, w) / 2);
      // enumeration oracle
      auto fn = [&](const Rational& x, const Rational& y) { return w(x, y); };
      for (size_t i = 0; i < ex.ks.size(); ++i) CHECK(ex.sums[i] == oracle::brute_lattice_sum(pts(P), ex.ks[i], fn));
      // integral oracle
      oracle::SlabProblem pr{pts(P), fn, {}, {}};
      CHECK(ex.leading == oracle::integrate(pr));
      CHECK(ex.subleading * 2 == oracle::boundary(pts(P), P.weights(), fn, [](auto&, auto&) { return std::vector<Rational>{}; }));
    }
}

TEST_CASE("root isolation", "[roots]") {
  PolyQ quartic({-12, -48, -52, -16, 1});
  auto r1 = isolate_real_roots(quartic, IsolationRange{Rational(0), std::nullopt}, rat(1, 1000));
  REQUIRE(r1.size() == 1);
  CHECK(r1[0].lo >= Q("18.888"));
  CHECK(r1[0].hi <= Q("18.890"));

  PolyQ cubic({-6, -9, -3, 1});
  auto r2 = isolate_real_roots(cubic, IsolationRange{Rational(0), std::nullopt}, rat(1, 10000));
  REQUIRE(r2.size() == 1);
  CHECK(r2[0].lo >= Q("5.027"));
  CHECK(r2[0].hi <= Q("5.028"));

  PolyQ sq({-1, 0, 1});
  auto r3 = isolate_real_roots(sq, IsolationRange{Rational(-2), Rational(2)}, rat(1, 100));
  REQUIRE(r3.size() == 2);
  CHECK(r3[0].lo <= -1);
  CHECK(r3[0].hi >= -1);
  CHECK(r3[1].lo <= 1);
  CHECK(r3[1].hi >= 1);
  CHECK(r3[0].hi < r3[1].lo);

  CHECK_THROWS_AS(isolate_real_roots(PolyQ(), rat(1, 10)), DomainError);

  // repeated and exact roots
  PolyQ rep = PolyQ::linear_root(rat(1, 3)) * PolyQ::linear_root(rat(1, 3)) * PolyQ::linear_root(2);
  auto r4 = isolate_real_roots(rep, rat(1, 1000000));
  REQUIRE(r4.size() == 2);
  CHECK(rational_roots_in(rep, Rational(-10), Rational(10)) == std::vector<Rational>{rat(1, 3), Rational(2)});
  CHECK(SturmIsolator(quartic).count_all() == 2);
}

TEST_CASE("Sturm sign constancy agrees with dense sampling", "[roots]") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> d(-6, 6);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Rational> c;
    int deg = 1 + trial % 5;
    for (int i = 0; i <= deg; ++i) c.emplace_back(d(rng));
    if (c.back() == 0) c.back() = 1;
    PolyQ p(c);
    Rational a(d(rng)), b = a + 1 + (trial % 3);
    int s = constant_sign_on(p, a, b);
    int pos = 0, neg = 0, zero = 0;
    for (int k = 1; k < 1000; ++k) {
      int v = sign(p(a + (b - a) * rat(k, 1000)));
      (v > 0 ? pos : v < 0 ? neg : zero)++;
    }
    if (s > 0) CHECK((neg == 0 && zero == 0));
    if (s < 0) CHECK((pos == 0 && zero == 0));
    // sampling can miss a pair of close roots, but a seen sign change must be reported
    if ((pos > 0 && neg > 0) || zero > 0) CHECK(s == 0);
  }
}

TEST_CASE("lagrange fit", "[roots]") {
  PolyQ p({1, -2, rat(1, 3)});
  std::vector<Rational> xs{1, 2, 3, 4}, ys;
  for (auto& x : xs) ys.push_back(p(x));
  CHECK(lagrange_fit(xs, ys) == p);
  CHECK_THROWS(lagrange_fit({1, 1}, {2, 3}));
}
