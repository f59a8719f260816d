#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kstab/geometry/polygon.hpp"

namespace kstab {

using json = nlohmann::json;

namespace detail {

inline Integer json_integer(const json& j) {
  if (j.is_number_integer()) return Integer(j.get<long long>());
  if (j.is_string()) {
    Rational r = parse_rational(j.get<std::string>());
    if (!is_integer(r)) throw ParseError("expected an integer, got " + j.get<std::string>());
    return numer(r);
  }
  throw ParseError("expected an integer");
}

}  // namespace detail

inline Rational json_rational(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_object() && j.contains("exact")) return parse_rational(j.at("exact").get<std::string>());
  throw ParseError("expected a rational (integer or \"p/q\" string)");
}

/// {"vertices": [[xn, xd, yn, yd], ...], "edge_weights": [..optional..]}
inline RationalPolygon polygon_from_json(const json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j.at("vertices").is_array())
    throw ParseError("polygon JSON needs a \"vertices\" array");
  std::vector<Vec2> verts;
  for (const auto& v : j.at("vertices")) {
    if (!v.is_array() || v.size() != 4) throw ParseError("each vertex is [num, den, num, den]");
    Integer xd = detail::json_integer(v[1]), yd = detail::json_integer(v[3]);
    if (xd == 0 || yd == 0) throw ParseError("zero denominator in vertex");
    verts.push_back({Rational(detail::json_integer(v[0])) / Rational(xd), Rational(detail::json_integer(v[2])) / Rational(yd)});
  }
  std::vector<Rational> weights;
  if (j.contains("edge_weights")) {
    for (const auto& w : j.at("edge_weights")) weights.push_back(json_rational(w));
  }
  return RationalPolygon(std::move(verts), std::move(weights));
}

inline json polygon_to_json(const RationalPolygon& P) {
  json verts = json::array();
  for (const auto& v : P.vertices())
    verts.push_back({numer(v.x).str(), denom(v.x).str(), numer(v.y).str(), denom(v.y).str()});
  json w = json::array();
  for (const auto& x : P.weights()) w.push_back(to_string(x));
  // integers are emitted as strings to keep big values exact; the reader accepts both
  return {{"vertices", verts}, {"edge_weights", w}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline RationalPolygon read_polygon_file(const std::string& path) { return polygon_from_json(read_json_file(path)); }

}  // namespace kstab
