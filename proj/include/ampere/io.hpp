#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ampere/transport.hpp"

namespace ampere {

// key order in emitted documents is part of the on-disk format
using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

// 17 significant digits: enough to reproduce any double exactly, and the
// fixed width keeps repeated runs byte-identical
inline std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

inline std::string fnv1a64_hex(std::string_view s) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

// ---------------------------------------------------------------------------
// CSV builders (header + one row per record, '\n' line ends, no trailing
// whitespace; wall-clock columns aside, the bytes depend only on the inputs)

inline std::string solution_csv(const MeshFunction& v, const Stencil& st) {
  const Grid& g = v.grid();
  std::string out = "i,j,x,y,u,grad_x,grad_y\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const GridIndex s = g.sites[k];
    const Vec2 p = g.position(s);
    out += std::to_string(s.i) + ',' + std::to_string(s.j) + ',';
    out += fmt17(p.x) + ',' + fmt17(p.y) + ',' + fmt17(v.values()[k]) + ',';
    if (const std::optional<Vec2> gp = select_gradient(v, s, st))
      out += fmt17(gp->x) + ',' + fmt17(gp->y);
    else
      out += "nan,nan";
    out += '\n';
  }
  return out;
}

inline std::string masses_csv(const Grid& g, const ProblemData& data) {
  if (data.masses.size() != g.size())
    throw std::invalid_argument("masses_csv: data does not match the grid");
  std::string out = "i,j,x,y,mu\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const GridIndex s = g.sites[k];
    const Vec2 p = g.position(s);
    out += std::to_string(s.i) + ',' + std::to_string(s.j) + ',';
    out += fmt17(p.x) + ',' + fmt17(p.y) + ',' + fmt17(data.masses[k]) + '\n';
  }
  return out;
}

inline std::string grid_csv(const Grid& g) {
  std::string out = "i,j,x,y,boundary\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const GridIndex s = g.sites[k];
    const Vec2 p = g.position(s);
    out += std::to_string(s.i) + ',' + std::to_string(s.j) + ',';
    out += fmt17(p.x) + ',' + fmt17(p.y) + ',';
    out += g.is_boundary(static_cast<int>(k)) ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline std::string stencil_csv(const Stencil& st) {
  std::string out = "i,j\n";
  for (const GridIndex& e : st.directions)
    out += std::to_string(e.i) + ',' + std::to_string(e.j) + '\n';
  return out;
}

inline std::string study_csv(const StudyResult& res) {
  std::string out = "h,radius,err_u,err_grad,order_u,order_grad,iters,seconds\n";
  for (const StudyRow& r : res.rows) {
    out += fmt17(r.h) + ',' + std::to_string(r.radius) + ',';
    out += fmt17(r.err_u) + ',' + fmt17(r.err_grad) + ',';
    out += fmt17(r.order_u) + ',' + fmt17(r.order_grad) + ',';
    out += std::to_string(r.iterations) + ',' + fmt17(r.seconds) + '\n';
  }
  return out;
}

inline std::string refinement_csv(const RefinementResult& res) {
  std::string out = "index,epsilon,hausdorff,diff_prev,iters,seconds,converged\n";
  for (const RefinementRow& r : res.rows) {
    out += std::to_string(r.index) + ',' + fmt17(r.epsilon) + ',';
    out += fmt17(r.hausdorff) + ',' + fmt17(r.diff_prev) + ',';
    out += std::to_string(r.iterations) + ',' + fmt17(r.seconds) + ',';
    out += r.converged ? '1' : '0';
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON builders

inline json polygon_json(const Polygon& p) {
  json arr = json::array();
  for (const Vec2& q : p.v) arr.push_back(json::array({q.x, q.y}));
  return arr;
}

inline json report_json(const SolveReport& rep) {
  json j;
  j["converged"] = rep.converged;
  j["iterations"] = rep.iterations;
  j["final_residual_sup"] = rep.final_residual_sup;
  j["stability_ok"] = rep.stability_ok;
  j["residual_history"] = rep.residual_history;
  return j;
}

// non-finite measurements (failed rows) are stored as JSON null, not NaN
inline json finite_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

inline json study_json(const StudyResult& res) {
  json rows = json::array();
  for (const StudyRow& r : res.rows) {
    json row;
    row["h"] = r.h;
    row["radius"] = r.radius;
    row["err_u"] = finite_or_null(r.err_u);
    row["err_grad"] = finite_or_null(r.err_grad);
    row["order_u"] = finite_or_null(r.order_u);
    row["order_grad"] = finite_or_null(r.order_grad);
    row["iterations"] = r.iterations;
    row["seconds"] = r.seconds;
    row["converged"] = r.converged;
    rows.push_back(std::move(row));
  }
  return json{{"rows", std::move(rows)}};
}

inline json refinement_json(const RefinementResult& res) {
  json rows = json::array();
  for (const RefinementRow& r : res.rows) {
    json row;
    row["index"] = r.index;
    row["epsilon"] = r.epsilon;
    row["hausdorff"] = r.hausdorff;
    row["diff_prev"] = r.diff_prev;
    row["iterations"] = r.iterations;
    row["seconds"] = r.seconds;
    row["converged"] = r.converged;
    rows.push_back(std::move(row));
  }
  return json{{"rows", std::move(rows)}};
}

}  // namespace ampere
