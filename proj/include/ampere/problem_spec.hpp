#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ampere/io.hpp"
#include "ampere/solver.hpp"

namespace ampere {

// A full problem read from a JSON document: geometry, densities, mesh and
// solver parameters. The prescribed subdifferential image (target_polygon)
// defaults to the closed target domain itself.
struct ProblemSpec {
  Polygon domain;          // Omega, support of f
  Polygon target_domain;   // Omega*, support of R
  Polygon target_polygon;  // K* <= closure(Omega*)
  Density source_f;
  Density target_r;
  double h = 0.0;
  int stencil_radius = 1;
  int quadrature_order = 5;
  SolverConfig solver;
  // optional increasing family K*_1 <= ... <= K*_M for refinement runs
  std::vector<Polygon> refinement_targets;
};

namespace detail {

inline std::string spec_err(const std::string& name, const std::string& msg) {
  return name.empty() ? msg : name + ": " + msg;
}

inline Vec2 vec2_from_json(const json& j, const std::string& name,
                           const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument(
        spec_err(name, what + " must be a [x, y] pair of numbers"));
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Polygon polygon_from_json(const json& j, const std::string& name,
                                 const std::string& what) {
  if (!j.is_array() || j.size() < 3)
    throw std::invalid_argument(
        spec_err(name, what + " must be an array of at least 3 vertices"));
  Polygon p;
  p.v.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k)
    p.v.push_back(vec2_from_json(j[k], name,
                                 what + " vertex " + std::to_string(k)));
  try {
    validate_polygon(p, what.c_str());
  } catch (const std::exception& e) {
    throw std::invalid_argument(spec_err(name, e.what()));
  }
  return p;
}

inline double number_field(const json& j, const char* key,
                           const std::string& name, const std::string& what) {
  if (!j.contains(key) || !j[key].is_number())
    throw std::invalid_argument(
        spec_err(name, what + " needs a numeric field '" + key + "'"));
  return j[key].get<double>();
}

// density descriptors: the analytic forms keep quadrature exact, so mass
// identities in the outputs hold to rounding rather than to sampling error
//   {"name": "constant",   "value": c}
//   {"name": "affine",     "a0": c, "slope": [sx, sy]}
//   {"name": "polynomial", "terms": [[i, j, c], ...]}  sum of c x^i y^j
inline Density density_from_json(const json& j, Polygon support,
                                 const std::string& name,
                                 const std::string& what) {
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
    throw std::invalid_argument(spec_err(
        name, what + " must be an object with a 'name' field"));
  const std::string kind = j["name"].get<std::string>();
  if (kind == "constant") {
    return Density::constant(number_field(j, "value", name, what),
                             std::move(support));
  }
  if (kind == "affine") {
    const double a0 = number_field(j, "a0", name, what);
    if (!j.contains("slope"))
      throw std::invalid_argument(
          spec_err(name, what + " needs a 'slope' field"));
    const Vec2 s = vec2_from_json(j["slope"], name, what + " slope");
    return Density::affine(a0, s, std::move(support));
  }
  if (kind == "polynomial") {
    if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
      throw std::invalid_argument(spec_err(
          name, what + " needs a non-empty 'terms' array of [i, j, c] rows"));
    struct Term {
      int i, j;
      double c;
    };
    std::vector<Term> terms;
    for (const json& t : j["terms"]) {
      if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() ||
          !t[1].is_number_integer() || !t[2].is_number())
        throw std::invalid_argument(spec_err(
            name, what + " terms must be [i, j, c] with integer exponents"));
      const int ei = t[0].get<int>();
      const int ej = t[1].get<int>();
      if (ei < 0 || ej < 0)
        throw std::invalid_argument(
            spec_err(name, what + " exponents must be non-negative"));
      terms.push_back({ei, ej, t[2].get<double>()});
    }
    return Density::general(
        [terms](Vec2 p) {
          double s = 0.0;
          for (const Term& t : terms)
            s += t.c * std::pow(p.x, t.i) * std::pow(p.y, t.j);
          return s;
        },
        std::move(support));
  }
  throw std::invalid_argument(spec_err(
      name, what + " has unknown density '" + kind +
                "' (known: constant, affine, polynomial)"));
}

}  // namespace detail

// Parse a problem document. `name` labels error messages (usually the file
// path); syntax errors keep the line/column text of the underlying parser.
inline ProblemSpec parse_spec_text(const std::string& text,
                                   const std::string& name = "") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(detail::spec_err(name, e.what()));
  }
  if (!doc.is_object())
    throw std::invalid_argument(
        detail::spec_err(name, "spec must be a JSON object"));

  ProblemSpec spec;
  try {
    for (const char* key : {"domain", "target_domain", "source_density",
                            "target_density", "h"})
      if (!doc.contains(key))
        throw std::invalid_argument(
            detail::spec_err(name, std::string("missing field '") + key + "'"));

    spec.domain = detail::polygon_from_json(doc["domain"], name, "domain");
    spec.target_domain =
        detail::polygon_from_json(doc["target_domain"], name, "target_domain");
    spec.target_polygon =
        doc.contains("target_polygon")
            ? detail::polygon_from_json(doc["target_polygon"], name,
                                        "target_polygon")
            : spec.target_domain;

    if (!doc["h"].is_number() || !(doc["h"].get<double>() > 0.0))
      throw std::invalid_argument(
          detail::spec_err(name, "h must be a positive number"));
    spec.h = doc["h"].get<double>();

    if (doc.contains("stencil_radius")) {
      if (!doc["stencil_radius"].is_number_integer() ||
          doc["stencil_radius"].get<int>() < 1)
        throw std::invalid_argument(detail::spec_err(
            name, "stencil_radius must be a positive integer"));
      spec.stencil_radius = doc["stencil_radius"].get<int>();
    }
    if (doc.contains("quadrature_order")) {
      if (!doc["quadrature_order"].is_number_integer() ||
          doc["quadrature_order"].get<int>() < 1)
        throw std::invalid_argument(detail::spec_err(
            name, "quadrature_order must be a positive integer"));
      spec.quadrature_order = doc["quadrature_order"].get<int>();
    }

    spec.source_f = detail::density_from_json(doc["source_density"],
                                              spec.domain, name,
                                              "source_density");
    spec.target_r = detail::density_from_json(doc["target_density"],
                                              spec.target_domain, name,
                                              "target_density");

    // the prescribed image must sit inside the closed target domain; report
    // the first offending vertex by coordinates
    double scale = 1.0;
    for (const Vec2& q : spec.target_domain.v)
      scale = std::max({scale, std::abs(q.x), std::abs(q.y)});
    for (const Vec2& q : spec.target_polygon.v)
      if (!contains_point(spec.target_domain, q, 1e-9 * scale))
        throw std::invalid_argument(detail::spec_err(
            name, "target_polygon vertex (" + fmt17(q.x) + ", " + fmt17(q.y) +
                      ") lies outside the target domain"));

    if (doc.contains("solver")) {
      const json& s = doc["solver"];
      if (!s.is_object())
        throw std::invalid_argument(
            detail::spec_err(name, "solver must be an object"));
      if (s.contains("method")) {
        const std::string m = s["method"].get<std::string>();
        if (m == "monotone")
          spec.solver.method = SolveMethod::monotone;
        else if (m == "newton")
          spec.solver.method = SolveMethod::newton;
        else
          throw std::invalid_argument(detail::spec_err(
              name, "solver method '" + m + "' (known: monotone, newton)"));
      }
      if (s.contains("tol_residual"))
        spec.solver.tol_residual = s["tol_residual"].get<double>();
      if (s.contains("max_iterations"))
        spec.solver.max_iterations = s["max_iterations"].get<int>();
      if (s.contains("newton_damping"))
        spec.solver.newton_damping = s["newton_damping"].get<double>();
      if (s.contains("fd_step"))
        spec.solver.fd_step = s["fd_step"].get<double>();
      if (s.contains("normalization_value"))
        spec.solver.normalization_value =
            s["normalization_value"].get<double>();
      if (s.contains("normalization_site")) {
        const json& ns = s["normalization_site"];
        if (!ns.is_array() || ns.size() != 2 || !ns[0].is_number_integer() ||
            !ns[1].is_number_integer())
          throw std::invalid_argument(detail::spec_err(
              name, "normalization_site must be an [i, j] integer pair"));
        spec.solver.normalization_site =
            GridIndex{ns[0].get<int>(), ns[1].get<int>()};
      }
    }

    if (doc.contains("refinement_targets")) {
      const json& rt = doc["refinement_targets"];
      if (!rt.is_array())
        throw std::invalid_argument(detail::spec_err(
            name, "refinement_targets must be an array of polygons"));
      for (std::size_t m = 0; m < rt.size(); ++m)
        spec.refinement_targets.push_back(detail::polygon_from_json(
            rt[m], name, "refinement_targets[" + std::to_string(m) + "]"));
    }
  } catch (const nlohmann::json::exception& e) {
    // wrong-type accesses and similar structural faults
    throw std::invalid_argument(detail::spec_err(name, e.what()));
  }
  return spec;
}

inline ProblemSpec parse_spec(const std::string& path) {
  return parse_spec_text(read_text(path), path);
}

struct SpecInstance {
  Grid grid;
  Stencil stencil;
  ProblemData data;
};

inline SpecInstance instantiate(const ProblemSpec& spec) {
  Grid grid = build_grid(spec.h, spec.domain);
  Stencil st = build_stencil(spec.stencil_radius, spec.target_polygon);
  const auto part = build_partition(grid);
  ProblemData data =
      make_problem_data(spec.source_f, spec.target_r, spec.target_polygon,
                        grid, part, spec.quadrature_order);
  return {std::move(grid), std::move(st), std::move(data)};
}

// normalized summary of an instantiated problem, for dump runs
inline json problem_json(const ProblemSpec& spec, const SpecInstance& inst) {
  json j;
  j["h"] = spec.h;
  j["stencil_radius"] = spec.stencil_radius;
  j["quadrature_order"] = spec.quadrature_order;
  j["domain"] = polygon_json(spec.domain);
  j["target_domain"] = polygon_json(spec.target_domain);
  j["target_polygon"] = polygon_json(spec.target_polygon);
  j["sites"] = inst.grid.size();
  j["boundary_sites"] = inst.grid.boundary_layer.size();
  j["stencil_directions"] = inst.stencil.directions.size();
  j["epsilon"] = inst.data.epsilon;
  j["mass_total"] = inst.data.mass_total;
  j["target_mass"] = inst.data.target_mass;
  return j;
}

}  // namespace ampere
