#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kstab/futaki/bounds.hpp"
#include "kstab/futaki/normal_cone.hpp"
#include "kstab/futaki/ruled.hpp"
#include "kstab/geometry/io.hpp"
#include "kstab/git/torus.hpp"
#include "kstab/momentum/glue.hpp"
#include "kstab/momentum/profile.hpp"
#include "kstab/toric/bundle.hpp"
#include "kstab/toric/stability.hpp"

namespace kstab::cli {

using json = nlohmann::json;

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_destabilized = 2, exit_usage = 64 };

/// Well-formed argv whose values do not parse (bad rational, malformed JSON literal).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- report values ----

inline json exact(const Rational& r) { return {{"exact", to_string(r)}, {"approx", to_double(r)}}; }
inline json real_value(const Real& r) { return {{"decimal", to_decimal(r, 20)}, {"approx", to_double(r)}}; }
inline json finite(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline json point(const Vec2& p) { return json::array({exact(p.x), exact(p.y)}); }

inline json exact_list(const std::vector<Rational>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(exact(x));
  return a;
}
inline json coefficients(const PolyQ& p) {
  std::vector<Rational> c;
  for (int i = 0; i <= p.degree(); ++i) c.push_back(p.coeff(i));
  return exact_list(c);
}
inline json density_json(const ExtremalAffine& A) {
  return {{"c0", exact(A.c0)}, {"cx", exact(A.cx)}, {"cy", exact(A.cy)}, {"constant", A.is_constant()}};
}
inline json chord_json(const SimplePL& s) {
  Affine l = s.lattice_form();
  return {{"p", point(s.p)}, {"q", point(s.q)}, {"lattice_form", exact_list({l.a, l.b, l.c})}};
}
inline json root_json(const RootInterval& r) {
  return {{"lo", exact(r.lo)}, {"hi", exact(r.hi)}, {"exact_root", r.exact}, {"midpoint", exact(r.midpoint())}};
}

// ---- argument parsing ----

inline Rational rational_arg(const std::string& text, const std::string& name) {
  try {
    return parse_rational(text);
  } catch (const Error& e) {
    throw UsageError(name + ": " + e.what());
  }
}

inline std::vector<Rational> rational_list(const std::string& text, const std::string& name) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(rational_arg(item, name));
  if (out.empty()) throw UsageError(name + ": empty list");
  return out;
}

/// "a,b,c;a,b,c" -> rows of exactly `width` rationals.
inline std::vector<std::vector<Rational>> rational_rows(const std::string& text, size_t width, const std::string& name) {
  std::vector<std::vector<Rational>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    auto r = rational_list(row, name);
    if (r.size() != width) throw UsageError(name + ": each piece needs " + std::to_string(width) + " coefficients");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw UsageError(name + ": no pieces");
  return rows;
}

inline json json_arg(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(name + ": " + e.what());
  }
}

// ---- files ----

/// Write to a sibling temporary, then rename over the target.
inline void write_atomic(const std::string& path, const std::string& data) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw Error(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    o << data;
    o.flush();
    if (!o) throw Error(ErrorCode::io, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::io, "cannot move output into place at " + path);
  }
}

// ---- run state ----

struct Globals {
  uint64_t seed = 0;
  bool no_timings = false;
  unsigned jobs = 1;
  std::string out;
  std::string witness = "witness.json";
};

struct Run {
  std::string command;
  const Globals* globals = nullptr;
  json inputs = json::object();
  json results = json::object();
  std::vector<std::string> notes;
  std::vector<std::pair<std::string, double>> timings;
  int exit_code = exit_ok;

  template <class F>
  auto timed(const std::string& phase, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
    timings.emplace_back(phase, dt.count());
    return r;
  }

  void destabilized(const json& witness) {
    write_atomic(globals->witness, witness.dump(2) + "\n");
    results["witness_file"] = globals->witness;
    exit_code = exit_destabilized;
  }

  json report() const {
    json r{{"command", command}, {"inputs", inputs}, {"results", results}, {"convention_notes", notes}};
    if (!globals->no_timings) {
      json t = json::object();
      for (const auto& [k, v] : timings) t[k] = v;
      r["timings"] = t;
    }
    return r;
  }
};

/// Maps f over items on up to `jobs` threads; results keep input order and the lowest-index failure is rethrown.
template <class T, class F>
auto parallel_map(const std::vector<T>& items, unsigned jobs, F&& f) {
  using R = decltype(f(items.front()));
  std::vector<std::optional<R>> slots(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next++) < items.size();) {
      try {
        slots[i].emplace(f(items[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(items.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<R> out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

// ---- polygon ----

inline json grid_witness(const ConeMinimum& cm, const std::optional<ExtremalAffine>& A) {
  const auto& M = cm.witness.mesh();
  json nodes = json::array(), values = json::array();
  for (size_t i = 0; i < M.nodes().size(); ++i) {
    nodes.push_back(point(M.nodes()[i]));
    values.push_back(exact(cm.witness.values()[i]));
  }
  auto jumps = cm.witness.convexity_jumps();
  std::optional<Rational> min_jump;
  for (const auto& j : jumps)
    if (!min_jump || j < *min_jump) min_jump = j;
  return {{"kind", "grid-pl-function"},
          {"polygon", polygon_to_json(M.polygon())},
          {"resolution", cm.resolution},
          {"relative", A.has_value()},
          {"functional", exact(donaldson_functional(cm.witness, A))},
          {"boundary_integral", exact(integrate(cm.witness, Region::boundary))},
          {"min_convexity_jump", min_jump ? exact(*min_jump) : json(nullptr)},
          {"nodes", nodes},
          {"values", values}};
}

inline json cone_json(const ConeMinimum& cm) {
  return {{"resolution", cm.resolution},
          {"min", exact(cm.value)},
          {"certified_nonnegative", cm.certified_nonnegative()},
          {"pivots", cm.pivots},
          {"anchor", point(cm.witness.mesh().nodes()[cm.anchor])},
          {"witness_convex", cm.witness.is_convex()}};
}

inline void polygon_check(Run& run, const std::string& file, const std::vector<int>& resolutions, bool relative) {
  auto P = run.timed("read", [&] { return read_polygon_file(file); });
  run.inputs = {{"file", file}, {"polygon", polygon_to_json(P)}, {"resolutions", resolutions}, {"relative", relative}};
  std::optional<ExtremalAffine> A;
  if (relative) A = extremal_affine(P);
  run.results["density"] = density_json(A ? *A : average_density(P));
  auto mins = run.timed("lp", [&] {
    return parallel_map(resolutions, run.globals->jobs, [&](int N) { return minimize_convex_cone(P, N, A); });
  });
  json levels = json::array();
  const ConeMinimum* bad = nullptr;
  for (const auto& cm : mins) {
    levels.push_back(cone_json(cm));
    if (!bad && !cm.certified_nonnegative()) bad = &cm;
  }
  run.results["levels"] = levels;
  run.notes.push_back("LP over convex grid functions normalized by f >= 0, f(anchor) = 0, boundary integral 1");
  run.notes.push_back(relative ? "functional uses the extremal affine density" : "functional uses the constant density |boundary| / |P|");
  run.notes.push_back("a nonnegative minimum certifies the grid cone at that resolution only");
  if (bad) {
    run.results["status"] = "destabilizer-found";
    run.destabilized(grid_witness(*bad, A));
  } else {
    run.results["status"] = "grid-certified";
  }
}

inline void polygon_decompose(Run& run, const std::string& file, int N) {
  auto P = run.timed("read", [&] { return read_polygon_file(file); });
  run.inputs = {{"file", file}, {"polygon", polygon_to_json(P)}, {"resolution", N}};
  ExtremalAffine A = extremal_affine(P);
  run.results["density"] = density_json(A);
  auto cm = run.timed("lp", [&] { return minimize_convex_cone(P, N, A); });
  run.results["certificate"] = cone_json(cm);
  if (!cm.certified_nonnegative()) {
    run.results["status"] = "destabilizer-found";
    run.destabilized(grid_witness(cm, A));
    return;
  }
  auto d = run.timed("decompose", [&] { return semistable_decomposition(P, N, A); });
  json pieces = json::array();
  for (const auto& pc : d.pieces)
    pieces.push_back({{"polygon", polygon_to_json(pc.polygon)},
                      {"kind", piece_kind_name(pc.kind)},
                      {"lp_min", exact(pc.lp_min)},
                      {"area", exact(pc.polygon.area())},
                      {"own_density", density_json(pc.own_density)}});
  json creases = json::array(), families = json::array();
  for (const auto& c : d.creases) creases.push_back(chord_json(c));
  for (const auto& f : d.families)
    families.push_back({{"edges", {f.edge_a, f.edge_b}},
                        {"direction", point(f.direction)},
                        {"first", chord_json(f.first)},
                        {"last", chord_json(f.last)},
                        {"s_range", exact_list({f.s_lo, f.s_hi})}});
  run.results["pieces"] = pieces;
  run.results["creases"] = creases;
  run.results["families"] = families;
  run.results["status"] = d.creases.empty() && d.families.empty() ? "no-zero-creases" : "decomposed";
  run.notes.push_back("cut edges carry boundary weight 0; each piece is tested with the density of the whole polygon");
}

inline void polygon_uniform(Run& run, const std::string& file, int N, int samples, int l2_samples) {
  auto P = run.timed("read", [&] { return read_polygon_file(file); });
  uint64_t seed = run.globals->seed;
  run.inputs = {{"file", file}, {"polygon", polygon_to_json(P)}, {"resolution", N}, {"samples", samples},
                {"l2_samples", l2_samples}, {"seed", seed}};
  auto est = run.timed("estimate", [&] { return uniform_ratio_estimate(P, N, samples, seed); });
  run.results["lambda_hat"] = finite(est.lambda_hat);
  run.results["lp_ratio"] = finite(est.lp_ratio);
  run.results["sampled_min"] = finite(est.sampled_min);
  run.results["samples_used"] = est.samples_used;
  run.results["lp_min"] = exact(est.lp_value);
  run.results["lp_certified"] = est.lp_certified;
  run.results["best_source"] = est.best_source;
  run.notes.push_back("lambda_hat is an upper estimate of the uniform constant, never the constant itself");
  run.notes.push_back("ratio is L_A(f) / ||pi f||_{L2(P)} with pi the projection off affine functions");
  if (l2_samples > 0) {
    auto chk = run.timed("l2-constant", [&] { return boundary_l2_constant_check(P, l2_samples, seed); });
    json levels = json::array();
    for (const auto& L : chk.levels)
      levels.push_back({{"grain", L.grain}, {"level_max", L.level_max}, {"running_max", L.running_max},
                        {"evaluated", L.evaluated}});
    run.results["l2_constant"] = {{"c_hat", chk.c_hat}, {"stabilized", chk.stabilized()}, {"levels", levels}};
  }
  if (!est.lp_certified) {
    ExtremalAffine A = extremal_affine(P);
    run.destabilized(grid_witness(minimize_convex_cone(P, N, A), A));
  }
}

inline void polygon_extremal(Run& run, const std::string& file) {
  auto P = run.timed("read", [&] { return read_polygon_file(file); });
  run.inputs = {{"file", file}, {"polygon", polygon_to_json(P)}};
  ExtremalAffine A = extremal_affine(P);
  run.results["extremal_affine"] = density_json(A);
  run.results["average_density"] = exact(average_density(P).c0);
  run.results["area"] = exact(P.area());
  run.results["boundary_measure"] = exact(P.boundary_measure());
  json zeros = json::object();
  zeros["1"] = exact(donaldson_functional(P, Affine{Rational(1), Rational(0), Rational(0)}, A));
  zeros["x"] = exact(donaldson_functional(P, Affine{Rational(0), Rational(1), Rational(0)}, A));
  zeros["y"] = exact(donaldson_functional(P, Affine{Rational(0), Rational(0), Rational(1)}, A));
  run.results["functional_on_affine"] = zeros;
}

// ---- git-torus ----

inline VecQ rational_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array");
  VecQ v;
  for (const auto& x : j) v.push_back(json_rational(x));
  return v;
}

inline git::WeightedAction action_from_json(const json& j) {
  if (!j.is_object() || !j.contains("weights")) throw ParseError("action JSON needs a \"weights\" array");
  git::WeightedAction a;
  for (const auto& w : j.at("weights")) a.weights.push_back(rational_vector(w, "weight"));
  if (a.weights.empty()) throw ParseError("no weights");
  a.dimension = j.contains("dimension") ? j.at("dimension").get<size_t>() : a.weights.front().size();
  if (j.contains("support")) {
    for (const auto& s : j.at("support")) a.support.push_back(s.get<bool>());
  } else {
    a.support.assign(a.weights.size(), true);
  }
  a.validate();
  return a;
}

inline json action_json(const git::WeightedAction& a) {
  json w = json::array();
  for (const auto& v : a.weights) {
    json row = json::array();
    for (const auto& x : v) row.push_back(to_string(x));
    w.push_back(row);
  }
  return {{"dimension", a.dimension}, {"weights", w}, {"support", a.support}};
}

inline json stability_json(const git::StabilityReport& r) {
  return {{"class", git::stability_class_name(r.cls)},
          {"semistable", r.semistable()},
          {"polystable", r.polystable()},
          {"relative_polystable", r.relative_polystable},
          {"hull_dimension", r.hull_dimension},
          {"modulus_sq", r.modulus_sq ? exact(*r.modulus_sq) : json(nullptr)},
          {"modulus", finite(r.modulus())},
          {"closest_point", exact_list(r.closest_point)},
          {"distance_sq", exact(r.distance_sq)},
          {"inf_moment_norm", r.inf_moment_norm()},
          {"worst_direction", r.worst_direction ? exact_list(*r.worst_direction) : json(nullptr)},
          {"worst_weight", exact(r.worst_weight)}};
}

inline void git_classify(Run& run, const git::WeightedAction& a) {
  auto rep = run.timed("classify", [&] { return git::classify_stability(a); });
  run.results = stability_json(rep);
  run.notes.push_back("Hilbert-Mumford weight is max over supported weights of <xi, alpha_j>");
  run.notes.push_back("modulus extends continuously over all real directions; null means +infinity");
  if (rep.cls == git::StabilityClass::unstable)
    run.destabilized({{"kind", "one-parameter-subgroup"},
                      {"direction", exact_list(*rep.worst_direction)},
                      {"weight", exact(rep.worst_weight)}});
}

inline void git_minimize(Run& run, const git::WeightedAction& a, const git::KempfNessOptions& opt) {
  run.inputs["tol"] = opt.tol;
  run.inputs["divergence_bound"] = opt.divergence_bound;
  run.inputs["max_iterations"] = opt.max_iterations;
  auto rep = git::classify_stability(a);
  auto kn = run.timed("minimize", [&] { return git::minimize_norm_functional(a, opt); });
  run.results = {{"class", git::stability_class_name(rep.cls)},
                 {"xi", kn.xi},
                 {"mu", kn.mu},
                 {"mu_norm", kn.mu_norm},
                 {"converged", kn.converged},
                 {"diverged", kn.diverged},
                 {"iterations", kn.iterations},
                 {"recession_direction", kn.recession_direction ? json(*kn.recession_direction) : json(nullptr)},
                 {"inf_moment_norm", rep.inf_moment_norm()}};
  run.notes.push_back("moment map mu(xi) = sum alpha_j e^{2<xi,alpha_j>} / sum e^{2<xi,alpha_j>}");
  if (kn.diverged)
    run.destabilized({{"kind", "recession-direction"},
                      {"direction", *kn.recession_direction},
                      {"certified_direction", exact_list(*rep.worst_direction)}});
}

inline void git_check_bounds(Run& run, const git::WeightedAction& a, const std::optional<VecQ>& alpha_in,
                             const std::optional<git::VecD>& chi_in) {
  auto rep = git::classify_stability(a);
  run.results["class"] = git::stability_class_name(rep.cls);
  bool all_hold = true;
  if (rep.polystable() && rep.hull_dimension > 0) {
    auto eb = run.timed("eigenvalue", [&] { return git::eigenvalue_bound_check(a); });
    run.results["eigenvalue_bound"] = {{"min_eigenvalue", eb.min_eigenvalue}, {"modulus", eb.modulus}, {"n", eb.n},
                                       {"bound", eb.bound}, {"holds", eb.holds}};
    all_hold = all_hold && eb.holds;
  } else {
    run.results["eigenvalue_bound"] = {{"skipped", true}, {"reason", "needs a polystable point with a nontrivial action"}};
  }
  std::optional<VecQ> alpha = alpha_in;
  if (!alpha && rep.worst_direction) {
    // clear denominators of the certified worst direction
    Integer l(1);
    for (const auto& x : *rep.worst_direction) l = bmp::lcm(l, denom(x));
    alpha = scale(*rep.worst_direction, Rational(l));
  }
  git::VecD chi;
  if (chi_in) {
    chi = *chi_in;
  } else {
    for (const auto& x : git::extremal_field(a)) chi.push_back(to_double(x));
  }
  if (alpha) {
    auto lb = run.timed("lower-bound", [&] { return git::moment_lower_bound_check(a, *alpha, chi); });
    run.results["lower_bound"] = {{"alpha", exact_list(*alpha)}, {"chi", chi}, {"weight", lb.weight},
                                  {"lhs", lb.lhs}, {"rhs", lb.rhs}, {"holds", lb.holds},
                                  {"skipped", lb.skipped}, {"reason", lb.reason}};
    all_hold = all_hold && (lb.holds || lb.skipped);
  } else {
    run.results["lower_bound"] = {{"skipped", true}, {"reason", "no direction supplied and none certified"}};
  }
  run.results["all_hold"] = all_hold;
  run.notes.push_back("eigenvalue bound 2 lambda^2 / n with n the number of supported weights");
  run.notes.push_back("lower bound inf |mu|^2 >= |chi|^2 + F_chi(alpha)^2 / |alpha|^2, chi defaults to the extremal field");
}

// ---- ruled surface ----

inline RuledMode ruled_mode(const std::string& pair) {
  if (pair.empty()) return RuledMode::whole_surface;
  return pair == "s0" ? RuledMode::pair_s_zero : RuledMode::pair_s_infinity;
}

inline json ruled_coefficients_json(const RuledCoefficients& r) {
  return {{"c0", exact(r.c0)}, {"c1", exact(r.c1)}, {"a0", exact(r.a0)}, {"a1", exact(r.a1)},
          {"b0", exact(r.b0)}, {"b1", exact(r.b1)}, {"ab0", exact(r.ab0)}, {"bb0", exact(r.bb0)}};
}

inline json ruled_bruteforce(const Rational& m, const Rational& c, RuledMode mode, long kmax) {
  long step = static_cast<long>(bmp::lcm(denom(m), denom(c)));
  size_t count = kmax > 0 ? static_cast<size_t>(kmax / step) : 0;
  if (count < 6)
    throw Error(ErrorCode::arity, "brute-force check needs 6 admissible k up to kmax; use kmax >= " +
                                      std::to_string(6 * step));
  auto ks = admissible_ks(m, c, count);
  auto fit = fit_ruled_tables(ruled_bruteforce_tables(m, c, ks, mode));
  auto cl = ruled_closed_coefficients(m, c, mode);
  json checks = {{"c0", fit.dim.coeff(2) == cl.c0},   {"c1", fit.dim.coeff(1) == cl.c1},
                 {"a0", fit.tr_a.coeff(3) == cl.a0},  {"a1", fit.tr_a.coeff(2) == cl.a1},
                 {"b0", fit.tr_b.coeff(3) == cl.b0},  {"b1", fit.tr_b.coeff(2) == cl.b1},
                 {"ab0", fit.tr_ab.coeff(4) == cl.ab0}, {"bb0", fit.tr_bb.coeff(4) == cl.bb0}};
  bool all = fit.exact;
  for (auto& [k, v] : checks.items()) all = all && v.get<bool>();
  auto prod = futaki_and_products(fit.alpha, TorusGenerator{fit.beta, fit.trace_cross});
  return {{"ks", ks},
          {"zero_residual", fit.exact},
          {"coefficient_matches", checks},
          {"all_match", all},
          {"relative_futaki_from_tables", exact(*prod.relative_futaki)}};
}

inline void ruled_futaki(Run& run, const Rational& m, const std::vector<Rational>& cs, RuledMode mode, long kmax) {
  run.inputs = {{"m", exact(m)}, {"c", exact_list(cs)}, {"mode", ruled_mode_name(mode)}, {"bruteforce_kmax", kmax}};
  auto rows = run.timed("evaluate", [&] {
    return parallel_map(cs, run.globals->jobs, [&](const Rational& c) {
      Rational F = ruled_relative_futaki(m, c, mode);
      auto coeffs = ruled_closed_coefficients(m, c, mode);
      json row{{"c", exact(c)},
               {"relative_futaki", exact(F)},
               {"sign", sign(F)},
               {"definition_value", exact(ruled_relative_futaki_from_coefficients(coeffs))},
               {"coefficients", ruled_coefficients_json(coeffs)}};
      if (kmax > 0) row["bruteforce"] = ruled_bruteforce(m, c, mode, kmax);
      return row;
    });
  });
  run.results["evaluations"] = rows;
  run.results["closed_form_scale"] = exact(ruled_closed_form_scale(m, mode));
  run.results["bracket"] = coefficients(ruled_bracket(m, mode));
  auto dc = destabilizing_c(m, mode);
  run.results["destabilizing_c"] = dc ? exact(*dc) : json(nullptr);
  if (mode != RuledMode::whole_surface) {
    auto nd = pair_nondegeneracy(m, mode);
    run.results["nondegeneracy"] = {{"c1_over_c0", exact(nd.c1_over_c0)},
                                    {"alpha2_over_alpha1", exact(nd.alpha2_over_alpha1)},
                                    {"scalar_condition", nd.scalar_condition},
                                    {"second_derivative_at_zero", exact(nd.second_derivative_at_zero)},
                                    {"relative_condition", nd.relative_condition}};
  }
  run.notes.push_back("relative_futaki is the printed closed form; definition_value = relative_futaki / closed_form_scale");
  run.notes.push_back("test configuration: deformation to the normal cone of S_infinity (S_0 for pair-s0) with parameter c");
  for (size_t i = 0; i < cs.size(); ++i) {
    if (rows[i]["sign"].get<int>() < 0) {
      run.destabilized({{"kind", "test-configuration"},
                        {"family", "deformation-to-normal-cone"},
                        {"mode", ruled_mode_name(mode)},
                        {"m", exact(m)},
                        {"c", exact(cs[i])},
                        {"relative_futaki", rows[i]["relative_futaki"]}});
      break;
    }
  }
}

inline void ruled_thresholds(Run& run, const Rational& precision) {
  run.inputs = {{"precision", exact(precision)}};
  auto t = run.timed("isolate", [&] { return instability_thresholds(precision); });
  run.results = {{"k1", root_json(t.k1)},
                 {"k2", root_json(t.k2)},
                 {"k1_positive_roots", t.k1_positive_roots},
                 {"k2_positive_roots", t.k2_positive_roots},
                 {"k1_polynomial", coefficients(k1_quartic())},
                 {"k2_polynomial", coefficients(k2_cubic())}};
  run.notes.push_back("Sturm-certified isolating intervals of width <= precision; polynomial coefficients from degree 0");
}

inline ClosedFormMode closed_form_mode(const std::string& type, bool shifted) {
  if (type == "smooth") return ClosedFormMode::smooth;
  if (type == "no-sinf") return ClosedFormMode::no_sinf;
  if (type == "complete-both") return ClosedFormMode::complete_both;
  return shifted ? ClosedFormMode::no_szero_shifted : ClosedFormMode::no_szero;
}

inline void ruled_extremal(Run& run, const Rational& m, const std::string& type, const std::optional<Rational>& shift) {
  run.inputs = {{"m", exact(m)}, {"type", type}, {"shift", shift ? exact(*shift) : json(nullptr)}};
  if (shift && type != "no-szero") throw UsageError("--shift applies to --type no-szero only");
  auto prof = closed_form_profile<Rational>(m, closed_form_mode(type, shift.has_value()), shift.value_or(Rational(0)));
  auto solved = solve_extremal<Rational>(prof.a, prof.b, prof.boundary);
  auto cert = positivity_certificate(prof);
  auto S = scalar_curvature(prof);
  run.results["interval"] = exact_list({prof.a, prof.b});
  run.results["boundary_class"] = boundary_class_name(prof.boundary);
  run.results["numerator"] = coefficients(prof.numerator);
  run.results["matches_boundary_value_solution"] = solved.numerator == prof.numerator;
  run.results["end_slopes"] = exact_list({prof.derivative(prof.a), prof.derivative(prof.b)});
  json sc{{"numerator", coefficients(S.numer)}, {"affine", S.is_affine()}, {"average", exact(average_scalar(S))}};
  if (S.is_affine()) {
    auto [slope, icpt] = S.affine();
    sc["slope"] = exact(slope);
    sc["intercept"] = exact(icpt);
  }
  run.results["scalar_curvature"] = sc;
  run.results["positivity"] = {{"positive", cert.positive},
                               {"bracket", coefficients(cert.bracket)},
                               {"bracket_sign", cert.bracket_sign},
                               {"order_at_a", cert.order_at_a},
                               {"order_at_b", cert.order_at_b},
                               {"end_a", cert.end_behaviour(cert.order_at_a)},
                               {"end_b", cert.end_behaviour(cert.order_at_b)}};
  run.notes.push_back("phi(tau) = numerator(tau) / (1 + tau), coefficients from degree 0; Q1 = 1 + tau, Q2 = -1");
  run.notes.push_back("scalar curvature S = numerator_S(tau) / (1 + tau) in the complex (half Riemannian) convention");
}

inline void ruled_calabi_inf(Run& run, const Rational& m, int refine) {
  run.inputs = {{"m", exact(m)}, {"refine", refine}, {"precision_digits", real_precision()}};
  auto g = run.timed("glue", [&] { return glue_calabi_minimizer(m); });
  auto r = run.timed("infimum", [&] { return infimum_report(g, refine); });
  Real diff = r.norm_alg * Real(r.differential_factor);
  run.results = {{"regime", r.regime},
                 {"c", real_value(r.c)},
                 {"s_hat", real_value(r.s_hat)},
                 {"tau_integral", real_value(r.tau_integral)},
                 {"calabi_norm", real_value(r.calabi)},
                 {"futaki", real_value(r.futaki)},
                 {"norm_algebraic", real_value(r.norm_alg)},
                 {"norm_differential", real_value(diff)},
                 {"bound", real_value(r.bound)},
                 {"relative_gap", real_value(r.gap)},
                 {"identity_residual", real_value(r.identity_residual)},
                 {"max_junction_mismatch", real_value(r.max_junction_mismatch)},
                 {"differential_factor", r.differential_factor}};
  run.notes.push_back("calabi_norm = 2 pi (int (S - S_hat)^2 (1 + tau) dtau)^{1/2}, base area 2 pi and unit fibre");
  run.notes.push_back("bound = 4 pi (-F(h)) / norm_algebraic with h = S_hat - S; norm_differential = differential_factor * norm_algebraic");
  run.notes.push_back("regime 1: two profiles glued at c = sqrt(m+1) - 1; regime 2: zero plateau between k2 and c");
}

inline void ruled_sample(Run& run, const Rational& m, int n, const std::string& path) {
  run.inputs = {{"m", exact(m)}, {"n", n}, {"out", path}, {"precision_digits", real_precision()}};
  bool glued = above_k1(m);
  auto g = run.timed("profile", [&] {
    return glued ? glue_calabi_minimizer(m) : as_glued(closed_form_profile<Real>(to_real(m), ClosedFormMode::smooth), m);
  });
  auto rows = run.timed("sample", [&] { return sample_profile(g, n); });
  std::string csv = "tau,phi,S\n";
  char buf[96];
  for (const auto& s : rows) {
    std::snprintf(buf, sizeof buf, "%.16e,%.16e,%.16e\n", s.tau, s.phi, s.scalar);
    csv += buf;
  }
  write_atomic(path, csv);
  run.results = {{"profile", glued ? "glued-calabi-minimizer" : "smooth-extremal"},
                 {"regime", g.regime},
                 {"rows", rows.size()},
                 {"file", path}};
  run.notes.push_back("rows are n uniform samples of [0, m] plus every junction point");
}

// ---- surface and bundle ----

inline SurfaceDivisorData surface_data_from_json(const json& j) {
  auto get = [&](const char* k) {
    if (!j.contains(k)) throw ParseError(std::string("surface data needs \"") + k + "\"");
    return json_rational(j.at(k));
  };
  SurfaceDivisorData d{get("zz"), get("lz"), get("ll"), get("kl"), get("kz"), Rational(0)};
  d.adjunction = j.contains("adjunction") ? json_rational(j.at("adjunction")) : d.kz + d.zz;
  return d;
}

inline void surface_normal_cone(Run& run, const SurfaceDivisorData& d, const Rational& c,
                                const std::optional<Rational>& seshadri) {
  run.inputs = {{"data", {{"zz", exact(d.zz)}, {"lz", exact(d.lz)}, {"ll", exact(d.ll)}, {"kl", exact(d.kl)},
                          {"kz", exact(d.kz)}, {"adjunction", exact(d.adjunction)}}},
                {"c", exact(c)},
                {"seshadri_bound", seshadri ? exact(*seshadri) : json(nullptr)}};
  Rational F = normal_cone_futaki(d, c, seshadri);
  run.results = {{"futaki", exact(F)},
                 {"sign", sign(F)},
                 {"slope", exact(surface_slope(d))},
                 {"alpha1", coefficients(normal_cone_alpha1(d))},
                 {"alpha2", coefficients(normal_cone_alpha2(d))}};
  run.notes.push_back("the caller supplies the Seshadri bound on c; without one only c > 0 is checked");
  if (F < 0)
    run.destabilized({{"kind", "test-configuration"}, {"family", "deformation-to-normal-cone"}, {"c", exact(c)},
                      {"futaki", exact(F)}});
}

/// Upper envelope of affine pieces c0 + c1 tau on [lo, hi].
inline PiecewiseFunction<Rational> interval_max_affine(const Rational& lo, const Rational& hi,
                                                       const std::vector<std::vector<Rational>>& pieces) {
  std::vector<Rational> cuts{lo, hi};
  for (size_t i = 0; i < pieces.size(); ++i)
    for (size_t j = i + 1; j < pieces.size(); ++j) {
      Rational ds = pieces[i][1] - pieces[j][1];
      if (ds == 0) continue;
      Rational x = (pieces[j][0] - pieces[i][0]) / ds;
      if (x > lo && x < hi) cuts.push_back(x);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<RationalPiece<Rational>> out;
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    Rational mid = (cuts[k] + cuts[k + 1]) / 2;
    size_t best = 0;
    for (size_t i = 1; i < pieces.size(); ++i)
      if (pieces[i][0] + pieces[i][1] * mid > pieces[best][0] + pieces[best][1] * mid) best = i;
    PolyQ p({pieces[best][0], pieces[best][1]});
    if (!out.empty() && out.back().numer == p) out.back().b = cuts[k + 1];
    else out.push_back({cuts[k], cuts[k + 1], p, 0});
  }
  return PiecewiseFunction<Rational>(std::move(out));
}

inline void bundle_interval(Run& run, const Rational& lo, const Rational& hi, const std::vector<Rational>& q1,
                            const std::vector<Rational>& q2, const std::vector<std::vector<Rational>>& fn) {
  if (!(hi > lo)) throw DomainError("interval needs lo < hi");
  run.inputs = {{"domain", "interval"}, {"interval", exact_list({lo, hi})}, {"q1", exact_list(q1)},
                {"q2", exact_list(q2)}, {"function_pieces", fn.size()}};
  auto f = interval_max_affine(lo, hi, fn);
  auto r = run.timed("futaki", [&] { return toric_bundle_futaki(f, PolyQ(q1), PolyQ(q2)); });
  auto F = r.exact_futaki();
  auto N = r.exact_norm_sq();
  run.results = {{"futaki", F ? exact(*F) : real_value(r.futaki_value())},
                 {"norm_sq", N ? exact(*N) : real_value(r.norm_sq_value())},
                 {"a0", exact(r.a0)},
                 {"a1", exact(r.a1)},
                 {"mean", real_value(r.mean_value())}};
  run.notes.push_back("boundary term is (f Q1)(lo) + (f Q1)(hi) over 2; norm is int (f - mean)^2 Q1");
  if (F ? *F < 0 : r.futaki_value() < 0)
    run.destabilized({{"kind", "convex-function"}, {"domain", "interval"}, {"interval", exact_list({lo, hi})},
                      {"pieces", fn.size()}, {"futaki", run.results["futaki"]}});
}

inline void bundle_polygon(Run& run, const std::string& file, int N, const std::vector<Rational>& q1,
                           const std::vector<Rational>& q2, const std::vector<std::vector<Rational>>& fn) {
  auto P = run.timed("read", [&] { return read_polygon_file(file); });
  if (q1.size() != 3 || q2.size() != 3) throw UsageError("--q1/--q2 on a polygon take c0,cx,cy");
  run.inputs = {{"domain", "polygon"}, {"file", file}, {"polygon", polygon_to_json(P)}, {"resolution", N},
                {"q1", exact_list(q1)}, {"q2", exact_list(q2)}, {"function_pieces", fn.size()}};
  std::vector<Affine> ls;
  for (const auto& r : fn) ls.push_back({r[0], r[1], r[2]});
  MaxAffine g(ls);
  auto mesh = std::make_shared<GridMesh>(P, N);
  auto f = PLFunction::sample(mesh, [&](const Vec2& p) { return g(p); });
  auto r = run.timed("futaki", [&] {
    return toric_bundle_futaki(f, Poly2Q::affine(q1[0], q1[1], q1[2]), Poly2Q::affine(q2[0], q2[1], q2[2]));
  });
  run.results = {{"futaki", exact(r.futaki)}, {"norm_sq", exact(r.norm_sq)}, {"a0", exact(r.a0)},
                 {"a1", exact(r.a1)},         {"mean", exact(r.mean)},       {"grid_convex", f.is_convex()}};
  run.notes.push_back("f is the grid interpolant of the max of the given affine pieces at the stated resolution");
  run.notes.push_back("with Q1 = 1 and Q2 = 0 the Futaki value is half the plain toric functional");
  if (r.futaki < 0)
    run.destabilized({{"kind", "convex-function"}, {"domain", "polygon"}, {"polygon", polygon_to_json(P)},
                      {"resolution", N}, {"futaki", exact(r.futaki)}});
}

// ---- dispatch ----

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"kstab: exact stability computations for toric, ruled and torus-action examples", "kstab"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Globals g;
  app.add_option("--seed", g.seed, "seed for randomized samplers")->default_val(0);
  app.add_flag("--no-timings", g.no_timings, "omit the timings block");
  app.add_option("--jobs", g.jobs, "worker threads for independent sub-tasks")->check(CLI::PositiveNumber)->default_val(1);
  app.add_option("--out", g.out, "write the JSON report here instead of stdout");
  app.add_option("--witness", g.witness, "file receiving a destabilizing witness")->default_val("witness.json");

  std::vector<std::pair<CLI::App*, std::function<void(Run&)>>> leaves;
  auto group = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->require_subcommand(1);
    s->fallthrough();
    return s;
  };
  auto leaf = [&](CLI::App* parent, const char* name, const char* help, std::function<void(Run&)> f) {
    auto* s = parent->add_subcommand(name, help);
    s->fallthrough();
    leaves.emplace_back(s, std::move(f));
    return s;
  };

  // polygon
  auto* poly = group("polygon", "Donaldson functional on lattice polygons");
  std::string pfile;
  std::vector<int> resolutions{4};
  bool relative = false;
  int presolution = 4, samples = 64, l2_samples = 0;
  auto* pcheck = leaf(poly, "check", "LP search for a destabilizing convex function",
                      [&](Run& r) { polygon_check(r, pfile, resolutions, relative); });
  pcheck->add_option("file", pfile, "polygon JSON")->required();
  pcheck->add_option("--resolution", resolutions, "grid resolution(s) N >= 2")->delimiter(',')->default_str("4");
  pcheck->add_flag("--relative", relative, "use the extremal affine density");
  auto* pdec = leaf(poly, "decompose", "zero creases and semistable decomposition",
                    [&](Run& r) { polygon_decompose(r, pfile, presolution); });
  pdec->add_option("file", pfile)->required();
  pdec->add_option("--resolution", presolution)->default_val(4);
  auto* puni = leaf(poly, "uniform", "uniform-stability ratio estimate",
                    [&](Run& r) { polygon_uniform(r, pfile, presolution, samples, l2_samples); });
  puni->add_option("file", pfile)->required();
  puni->add_option("--resolution", presolution)->default_val(4);
  puni->add_option("--samples", samples, "random convex test functions")->default_val(64);
  puni->add_option("--l2-samples", l2_samples, "samples per level of the boundary L2 constant check (0 skips)")->default_val(0);
  auto* pext = leaf(poly, "extremal-affine", "extremal affine density", [&](Run& r) { polygon_extremal(r, pfile); });
  pext->add_option("file", pfile)->required();

  // git-torus
  auto* torus = group("git-torus", "torus actions on projective space");
  std::string afile, aweights, asupport, aalpha, achi;
  git::KempfNessOptions kn;
  auto action = [&](Run& r) {
    json j;
    if (!afile.empty()) {
      j = read_json_file(afile);
    } else if (!aweights.empty()) {
      j = {{"weights", json_arg(aweights, "--weights")}};
    } else {
      throw UsageError("give an action file or --weights");
    }
    if (!asupport.empty()) j["support"] = json_arg(asupport, "--support");
    auto a = action_from_json(j);
    r.inputs = {{"action", action_json(a)}};
    if (!afile.empty()) r.inputs["file"] = afile;
    return a;
  };
  auto add_action = [&](CLI::App* s) {
    s->add_option("file", afile, "action JSON {dimension, weights, support}");
    s->add_option("--weights", aweights, "inline weights, e.g. '[[1],[2]]'");
    s->add_option("--support", asupport, "inline support flags, e.g. '[true,false]'");
  };
  add_action(leaf(torus, "classify", "stability class via the weight polytope", [&](Run& r) { git_classify(r, action(r)); }));
  auto* gmin = leaf(torus, "minimize", "Kempf-Ness minimization of the norm functional",
                    [&](Run& r) { git_minimize(r, action(r), kn); });
  add_action(gmin);
  gmin->add_option("--tol", kn.tol)->default_val(1e-10);
  gmin->add_option("--divergence-bound", kn.divergence_bound)->default_val(1e3);
  gmin->add_option("--max-iterations", kn.max_iterations)->default_val(20000);
  auto* gchk = leaf(torus, "check-bounds", "eigenvalue and moment lower bounds", [&](Run& r) {
    auto a = action(r);
    std::optional<VecQ> alpha;
    std::optional<git::VecD> chi;
    if (!aalpha.empty()) alpha = rational_vector(json_arg(aalpha, "--alpha"), "--alpha");
    if (!achi.empty()) chi = json_arg(achi, "--chi").get<git::VecD>();
    r.inputs["alpha"] = aalpha.empty() ? json(nullptr) : json(aalpha);
    r.inputs["chi"] = chi ? json(*chi) : json(nullptr);
    git_check_bounds(r, a, alpha, chi);
  });
  add_action(gchk);
  gchk->add_option("--alpha", aalpha, "integer direction, default the certified worst direction");
  gchk->add_option("--chi", achi, "stabilizer element, default the extremal field");

  // ruled
  auto* ruled = group("ruled", "genus-2 ruled surface");
  std::string rm, rc, rpair, rprec = "1/1000", rtype, rshift, rout;
  long kmax = 0;
  int refine = 1, nsamples = 200;
  auto* rfut = leaf(ruled, "futaki", "relative Futaki invariant of the normal-cone test configuration", [&](Run& r) {
    ruled_futaki(r, rational_arg(rm, "--m"), rational_list(rc, "--c"), ruled_mode(rpair), kmax);
  });
  rfut->add_option("--m", rm)->required();
  rfut->add_option("--c", rc, "c, or a comma-separated list of c")->required();
  rfut->add_option("--pair", rpair)->check(CLI::IsMember({"s0", "sinf"}));
  rfut->add_option("--bruteforce-check", kmax, "fit brute-force weight tables with k up to kmax");
  auto* rthr = leaf(ruled, "thresholds", "certified k1 and k2",
                    [&](Run& r) { ruled_thresholds(r, rational_arg(rprec, "--precision")); });
  rthr->add_option("--precision", rprec)->default_val("1/1000");
  auto* rext = leaf(ruled, "extremal", "closed-form extremal profile", [&](Run& r) {
    std::optional<Rational> shift;
    if (!rshift.empty()) shift = rational_arg(rshift, "--shift");
    ruled_extremal(r, rational_arg(rm, "--m"), rtype, shift);
  });
  rext->add_option("--m", rm)->required();
  rext->add_option("--type", rtype)->required()->check(CLI::IsMember({"smooth", "no-szero", "no-sinf", "complete-both"}));
  rext->add_option("--shift", rshift);
  auto* rinf = leaf(ruled, "calabi-inf", "glued minimizer and the Calabi infimum",
                    [&](Run& r) { ruled_calabi_inf(r, rational_arg(rm, "--m"), refine); });
  rinf->add_option("--m", rm, "decimal or p/q")->required();
  rinf->add_option("--refine", refine)->default_val(1)->check(CLI::PositiveNumber);
  auto* rsam = leaf(ruled, "sample", "tabulate phi and S to CSV",
                    [&](Run& r) { ruled_sample(r, rational_arg(rm, "--m"), nsamples, rout); });
  rsam->add_option("--m", rm)->required();
  rsam->add_option("--n", nsamples)->default_val(200);
  rsam->add_option("--out", rout, "CSV path")->required();

  // surface
  auto* surf = group("surface", "surfaces with a divisor");
  std::string sdata, sc, ssesh;
  auto* snc = leaf(surf, "normal-cone", "Futaki invariant of the deformation to the normal cone", [&](Run& r) {
    json j = !sdata.empty() && sdata.front() == '{' ? json_arg(sdata, "--data") : read_json_file(sdata);
    std::optional<Rational> sesh;
    if (!ssesh.empty()) sesh = rational_arg(ssesh, "--seshadri");
    surface_normal_cone(r, surface_data_from_json(j), rational_arg(sc, "--c"), sesh);
  });
  snc->add_option("--data", sdata, "JSON file or inline object with zz, lz, ll, kl, kz[, adjunction]")->required();
  snc->add_option("--c", sc)->required();
  snc->add_option("--seshadri", ssesh, "upper bound on c");

  // bundle
  auto* bundle = group("bundle", "toric bundles");
  std::string binterval, bpoly, bq1, bq2, bfn;
  int bres = 4;
  auto* bfut = leaf(bundle, "futaki", "Futaki invariant of a convex function on the momentum domain", [&](Run& r) {
    if (binterval.empty() && bpoly.empty()) throw UsageError("give --interval or --polygon");
    if (!binterval.empty()) {
      auto iv = rational_list(binterval, "--interval");
      if (iv.size() != 2) throw UsageError("--interval takes lo,hi");
      bundle_interval(r, iv[0], iv[1], rational_list(bq1.empty() ? "1" : bq1, "--q1"),
                      rational_list(bq2.empty() ? "0" : bq2, "--q2"), rational_rows(bfn, 2, "--function"));
    } else {
      bundle_polygon(r, bpoly, bres, rational_list(bq1.empty() ? "1,0,0" : bq1, "--q1"),
                     rational_list(bq2.empty() ? "0,0,0" : bq2, "--q2"), rational_rows(bfn, 3, "--function"));
    }
  });
  auto* oi = bfut->add_option("--interval", binterval, "lo,hi");
  auto* op = bfut->add_option("--polygon", bpoly, "polygon JSON");
  oi->excludes(op);
  bfut->add_option("--q1", bq1, "Q1 coefficients (interval: from degree 0; polygon: c0,cx,cy)");
  bfut->add_option("--q2", bq2, "Q2 coefficients");
  bfut->add_option("--function", bfn, "max of affine pieces, 'c0,c1;...' or 'c0,cx,cy;...'")->required();
  bfut->add_option("--resolution", bres)->default_val(4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  Run r;
  r.globals = &g;
  CLI::App* chosen = nullptr;
  std::function<void(Run&)> action_fn;
  for (auto& [s, f] : leaves)
    if (s->parsed()) {
      chosen = s;
      action_fn = f;
    }
  if (!chosen) {
    err << app.help();
    return exit_usage;
  }
  r.command = chosen->get_parent()->get_name() + " " + chosen->get_name();
  try {
    action_fn(r);
    std::string text = r.report().dump(2) + "\n";
    if (g.out.empty()) out << text;
    else write_atomic(g.out, text);
    return r.exit_code;
  } catch (const UsageError& e) {
    err << e.what() << "\n" << chosen->help();
    return exit_usage;
  } catch (const Error& e) {
    json j{{"command", r.command}, {"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}};
    err << j.dump(2) << "\n";
    return exit_error;
  } catch (const std::exception& e) {
    json j{{"command", r.command}, {"error", {{"code", "internal"}, {"message", e.what()}}}};
    err << j.dump(2) << "\n";
    return exit_error;
  }
}

}  // namespace kstab::cli
