#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "extension.hpp"
#include "geometry.hpp"
#include "lattice.hpp"

namespace ampere {

// ---------------------------------------------------------------------------
// discrete subdifferential

// Constraints of the discrete subdifferential at x:
//   p . (h e) >= v(x) - v(x - h e)   for every stencil direction e,
// with v extended beyond the grid by the asymptotic-cone formula.
inline std::vector<HalfPlane> subdifferential_constraints(const MeshFunction& fn,
                                                          GridIndex x,
                                                          const Stencil& st) {
  const double h = fn.grid().h;
  const double vx = fn.eval(x);
  std::vector<HalfPlane> cons;
  cons.reserve(st.directions.size());
  for (const GridIndex& e : st.directions)
    cons.push_back({{h * e.i, h * e.j}, vx - fn.eval(x - e)});
  return cons;
}

// Geometric cell.  A stencil that carries the target's edge normals keeps
// every cell of a discrete convex function bounded; an unbounded
// intersection means that invariant was broken upstream.
inline Region subdifferential_cell(const MeshFunction& fn, GridIndex x,
                                   const Stencil& st) {
  Region r = intersect_half_planes(subdifferential_constraints(fn, x, st));
  if (r.kind == RegionKind::unbounded)
    throw std::logic_error(
        "subdifferential_cell: unbounded cell; stencil is missing the "
        "target's edge normals");
  return r;
}

// ---------------------------------------------------------------------------
// R-curvature

// Integral of rho over the constraint set.  Clips supp(rho) against the
// half-planes instead of building the cell first: the value only depends on
// cell ∩ supp(rho), and this form stays finite even when a trial update
// makes the raw intersection unbounded.
inline double masked_cell_mass(const std::vector<HalfPlane>& cons,
                               const Density& rho, int order = 5) {
  Polygon region = rho.support;
  for (const HalfPlane& hp : cons) {
    region = clip_polygon(region, hp);
    if (region.size() < 3) return 0.0;
  }
  canonicalize_polygon(region);
  return integrate_density(region, rho, order);
}

inline double r_curvature(const MeshFunction& fn, GridIndex x, const Stencil& st,
                          const Density& rho, int order = 5) {
  return masked_cell_mass(subdifferential_constraints(fn, x, st), rho, order);
}

struct SubdiffCell {
  GridIndex site;
  Region cell;
  double mass = 0.0;
};

inline SubdiffCell make_subdiff_cell(const MeshFunction& fn, GridIndex x,
                                     const Stencil& st, const Density& rho,
                                     int order = 5) {
  const std::vector<HalfPlane> cons = subdifferential_constraints(fn, x, st);
  Region r = intersect_half_planes(cons);
  if (r.kind == RegionKind::unbounded)
    throw std::logic_error("make_subdiff_cell: unbounded cell");
  return {x, std::move(r), masked_cell_mass(cons, rho, order)};
}

// ---------------------------------------------------------------------------
// problem assembly

// Mass defect correction: the fraction of the source mass that must be
// withheld so that the image polygon, rather than all of supp(R), receives
// the transported mass.
inline double epsilon_correction(const Density& f, const Density& rho,
                                 const Polygon& target, int order = 5) {
  const double total_f = integrate_density(f.support, f, order);
  if (!(total_f > 0.0))
    throw std::invalid_argument(
        "epsilon_correction: source density has zero total mass");
  const double r_domain = integrate_density(rho.support, rho, order);
  const double r_target = integrate_density(target, rho, order);
  return (r_domain - r_target) / total_f;
}

inline std::vector<double> target_masses(const Density& f, double epsilon,
                                         const std::vector<PartitionCell>& partition,
                                         int order = 5) {
  std::vector<double> mu(partition.size());
  for (std::size_t k = 0; k < partition.size(); ++k)
    mu[k] = (1.0 - epsilon) * integrate_density(partition[k].region, f, order);
  return mu;
}

struct ProblemData {
  Density source_f;   // density on the source domain (its support)
  Density target_r;   // density on the target domain (its support)
  Polygon target;     // prescribed subdifferential image, subset of supp(R)
  double epsilon = 0.0;
  std::vector<double> masses;  // mu_x, aligned with grid.sites
  double mass_total = 0.0;     // sum of masses
  double target_mass = 0.0;    // integral of R over the image polygon
  int quadrature_order = 5;
};

inline ProblemData make_problem_data(Density f, Density rho, Polygon target,
                                     const Grid& grid,
                                     const std::vector<PartitionCell>& partition,
                                     int order = 5) {
  validate_polygon(target, "make_problem_data target");
  if (partition.size() != grid.size())
    throw std::invalid_argument(
        "make_problem_data: partition does not match the grid");

  double scale = 1.0;
  for (const Vec2& q : rho.support.v)
    scale = std::max({scale, std::abs(q.x), std::abs(q.y)});
  for (const Vec2& q : target.v)
    if (signed_distance_inside(rho.support, q) < -1e-9 * scale)
      throw std::invalid_argument(
          "make_problem_data: target polygon leaves the support of R");

  // total source mass through the partition, so that the correction and the
  // per-cell masses telescope exactly
  double total_f = 0.0;
  for (const PartitionCell& cell : partition)
    total_f += integrate_density(cell.region, f, order);
  if (!(total_f > 0.0))
    throw std::invalid_argument(
        "make_problem_data: source density has zero total mass");

  const double r_domain = integrate_density(rho.support, rho, order);
  const double r_target = integrate_density(target, rho, order);

  const bool exact_paths = f.kind != Density::Kind::general &&
                           rho.kind != Density::Kind::general;
  const double compat_tol = (exact_paths ? 1e-8 : 1e-6) *
                            std::max({1.0, total_f, r_domain});
  if (std::abs(total_f - r_domain) > compat_tol)
    throw std::invalid_argument(
        "make_problem_data: source mass " + std::to_string(total_f) +
        " does not balance target mass " + std::to_string(r_domain));

  double eps = (r_domain - r_target) / total_f;
  if (eps < 0.0) {
    if (eps < -1e-9)
      throw std::invalid_argument(
          "make_problem_data: image polygon carries more R-mass than the "
          "whole target domain");
    eps = 0.0;
  }
  if (eps >= 1.0)
    throw std::invalid_argument(
        "make_problem_data: image polygon carries no R-mass");

  ProblemData data;
  data.source_f = std::move(f);
  data.target_r = std::move(rho);
  data.target = std::move(target);
  data.epsilon = eps;
  data.quadrature_order = order;
  data.masses = target_masses(data.source_f, eps, partition, order);
  data.target_mass = r_target;
  double s = 0.0;
  for (double m : data.masses) s += m;
  data.mass_total = s;
  return data;
}

inline bool has_degenerate_mass(const ProblemData& data, double tol = 0.0) {
  for (double m : data.masses)
    if (m <= tol) return true;
  return false;
}

// ---------------------------------------------------------------------------
// residual

struct ResidualReport {
  std::vector<double> omega;     // R-curvature per site
  std::vector<double> residual;  // omega - mu
  double sup = 0.0;
  double total_omega = 0.0;
};

inline ResidualReport residual(const MeshFunction& fn, const ProblemData& data,
                               const Stencil& st) {
  const Grid& g = fn.grid();
  if (data.masses.size() != g.size())
    throw std::invalid_argument("residual: problem data does not match the grid");
  ResidualReport rep;
  rep.omega.resize(g.size());
  rep.residual.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w =
        r_curvature(fn, g.sites[k], st, data.target_r, data.quadrature_order);
    rep.omega[k] = w;
    rep.residual[k] = w - data.masses[k];
    rep.sup = std::max(rep.sup, std::abs(rep.residual[k]));
    rep.total_omega += w;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// degenerate sources

inline Polygon dilate_about(const Polygon& p, Vec2 c, double t) {
  Polygon out = p;
  for (Vec2& q : out.v) q = c + t * (q - c);
  return out;
}

// Lift vanishing masses: add eps_reg * |E_x| to every mass and dilate the
// image polygon about its centroid until it absorbs the extra mass.  The
// dilation factor tends to 1 as eps_reg -> 0; the dilated polygon must stay
// inside the closed target domain.
inline ProblemData regularize_degenerate(const ProblemData& data, double eps_reg,
                                         const std::vector<PartitionCell>& partition) {
  if (!(eps_reg > 0.0))
    throw std::invalid_argument("regularize_degenerate: eps_reg must be positive");
  if (partition.size() != data.masses.size())
    throw std::invalid_argument(
        "regularize_degenerate: partition does not match the problem data");

  ProblemData out = data;
  double total = 0.0;
  for (std::size_t k = 0; k < partition.size(); ++k) {
    out.masses[k] = data.masses[k] + eps_reg * polygon_area(partition[k].region);
    total += out.masses[k];
  }
  out.mass_total = total;

  const Polygon& domain = data.target_r.support;
  const Vec2 c = polygon_centroid(data.target);

  // largest dilation keeping every image vertex inside the closed domain
  double t_max = std::numeric_limits<double>::infinity();
  const std::size_t n = domain.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = domain[i], b = domain[(i + 1) % n];
    const Vec2 nrm = perp(b - a);  // inward
    const double rhs = dot(nrm, a - c);
    for (const Vec2& v : data.target.v) {
      const double coef = dot(nrm, v - c);
      if (coef < -1e-300) t_max = std::min(t_max, rhs / coef);
    }
  }
  if (!(t_max >= 1.0)) t_max = 1.0;

  const auto mass_at = [&](double t) {
    return integrate_density(dilate_about(data.target, c, t), data.target_r,
                             data.quadrature_order);
  };

  const double tol = 1e-12 * std::max(1.0, total);
  if (mass_at(t_max) < total - tol)
    throw std::invalid_argument(
        "regularize_degenerate: regularized image cannot fit inside the "
        "target domain; reduce eps_reg");

  double lo = 1.0, hi = t_max, t = t_max;
  for (int iter = 0; iter < 200; ++iter) {
    t = 0.5 * (lo + hi);
    const double gap = mass_at(t) - total;
    if (std::abs(gap) <= tol) break;
    (gap < 0.0 ? lo : hi) = t;
  }
  out.target = dilate_about(data.target, c, t);
  out.target_mass = mass_at(t);
  return out;
}

}  // namespace ampere
