#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "extension.hpp"
#include "geometry.hpp"
#include "lattice.hpp"
#include "ma_operator.hpp"

namespace ampere {

enum class SolveMethod { monotone, newton };

struct SolverConfig {
  SolveMethod method = SolveMethod::newton;
  // site where the solution is pinned; default: grid point nearest the
  // domain centroid, ties to the lexicographically smaller index
  std::optional<GridIndex> normalization_site;
  double normalization_value = 0.0;
  double tol_residual = 0.0;    // <= 0: 1e-10 * total target mass
  int max_iterations = 0;       // <= 0: 2000 sweeps / 60 newton steps
  double newton_damping = 1.0;  // initial line-search fraction, in (0,1]
  double fd_step = 1e-6;        // jacobian difference step, in units of h
};

struct SolveReport {
  MeshFunction solution;
  int iterations = 0;
  double final_residual_sup = std::numeric_limits<double>::infinity();
  std::vector<double> residual_history;  // sup residual per sweep/step
  bool converged = false;
  bool stability_ok = true;  // iterates stayed under the a-priori bound
};

inline GridIndex resolve_normalization_site(const Grid& g, const SolverConfig& cfg) {
  if (cfg.normalization_site) {
    if (!g.contains(*cfg.normalization_site))
      throw std::invalid_argument(
          "resolve_normalization_site: site is not a grid point");
    return *cfg.normalization_site;
  }
  const Vec2 c = polygon_centroid(g.domain);
  GridIndex best = g.sites[0];
  double bd = std::numeric_limits<double>::infinity();
  for (const GridIndex& s : g.sites) {
    const double d = norm2(g.position(s) - c);
    const bool tie_break =
        d == bd && (s.i < best.i || (s.i == best.i && s.j < best.j));
    if (d < bd || tie_break) {
      bd = d;
      best = s;
    }
  }
  return best;
}

inline MeshFunction initial_guess(const Grid& g, const ProblemData& data,
                                  const SolverConfig& cfg = {}) {
  const GridIndex x1 = resolve_normalization_site(g, cfg);
  MeshFunction v(g, data.target);
  v.sample(ConeFunction{g.position(x1), cfg.normalization_value, data.target});
  return v;
}

// Sup-norm bound every iterate must respect: |alpha| + C diam_1(Omega) with
// C the largest vertex coordinate of the image polygon.
inline double stability_bound(const Grid& g, const Polygon& target, double alpha) {
  double cmax = 0.0;
  for (const Vec2& a : target.v) cmax = std::max({cmax, std::abs(a.x), std::abs(a.y)});
  double xmin = g.domain[0].x, xmax = xmin, ymin = g.domain[0].y, ymax = ymin;
  for (const Vec2& q : g.domain.v) {
    xmin = std::min(xmin, q.x);
    xmax = std::max(xmax, q.x);
    ymin = std::min(ymin, q.y);
    ymax = std::max(ymax, q.y);
  }
  return std::abs(alpha) + cmax * ((xmax - xmin) + (ymax - ymin));
}

namespace detail {

inline double effective_tol(const ProblemData& data, const SolverConfig& cfg) {
  return cfg.tol_residual > 0.0 ? cfg.tol_residual : 1e-10 * data.mass_total;
}

inline void require_nondegenerate(const ProblemData& data) {
  if (has_degenerate_mass(data))
    throw std::invalid_argument(
        "solve: some target masses vanish; apply regularize_degenerate first");
}

// R-curvature at x when the value at site y_idx is shifted by t, without
// mutating the function.  The extension responds through the cached witness
// triple: if y was the minimizing boundary site the runner-up takes over,
// otherwise y's shifted contribution competes with the unperturbed minimum.
inline double shifted_mass(const MeshFunction& v, GridIndex x, int y_idx, double t,
                           const Stencil& st, const Density& rho, int order) {
  const Grid& g = v.grid();
  const double h = g.h;
  const int x_idx = g.index_of(x);
  const bool y_boundary = y_idx >= 0 && g.is_boundary(y_idx);
  const double vx = v[x_idx] + (x_idx == y_idx ? t : 0.0);

  std::vector<HalfPlane> cons;
  cons.reserve(st.directions.size());
  for (const GridIndex& e : st.directions) {
    const GridIndex z = x - e;
    const int zi = g.index_of(z);
    double vz;
    if (zi >= 0) {
      vz = v[zi] + (zi == y_idx ? t : 0.0);
    } else {
      const ExtensionWitness w = v.extension_witness(z);
      if (!y_boundary)
        vz = w.best_val;
      else if (w.best_site == y_idx)
        vz = std::min(w.best_val + t, w.second_val);
      else
        vz = std::min(w.best_val, v[y_idx] + v.boundary_offset(z, y_idx) + t);
    }
    cons.push_back({{h * e.i, h * e.j}, vx - vz});
  }
  return masked_cell_mass(cons, rho, order);
}

// One Gauss-Seidel pass: lower every site except x1 by the largest amount
// that keeps its curvature at or below its mass.
inline void monotone_sweep(MeshFunction& v, const ProblemData& data,
                           const Stencil& st, int x1_idx, double delta0) {
  const Grid& g = v.grid();
  const int n = static_cast<int>(g.size());
  for (int k = 0; k < n; ++k) {
    if (k == x1_idx) continue;
    const GridIndex x = g.sites[k];
    const double mu = data.masses[k];
    if (!(shifted_mass(v, x, -1, 0.0, st, data.target_r, data.quadrature_order) <
          mu))
      continue;
    double lo = 0.0, hi = std::max(delta0, 1e-12);
    bool bracketed = false;
    for (int d = 0; d < 60; ++d) {
      if (shifted_mass(v, x, k, -hi, st, data.target_r, data.quadrature_order) >
          mu) {
        bracketed = true;
        break;
      }
      lo = hi;
      hi *= 2.0;
    }
    if (bracketed) {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double m =
            shifted_mass(v, x, k, -mid, st, data.target_r, data.quadrature_order);
        (m <= mu ? lo : hi) = mid;
      }
    }
    if (lo > 0.0) v.set(k, v[k] - lo);
  }
}

inline double sup_value(const MeshFunction& v) {
  double s = 0.0;
  for (double q : v.values()) s = std::max(s, std::abs(q));
  return s;
}

}  // namespace detail

inline SolveReport solve_monotone(const Grid& g, const ProblemData& data,
                                  const Stencil& st, const SolverConfig& cfg = {}) {
  detail::require_nondegenerate(data);
  const double tol = detail::effective_tol(data, cfg);
  const int max_sweeps = cfg.max_iterations > 0 ? cfg.max_iterations : 2000;
  const GridIndex x1 = resolve_normalization_site(g, cfg);
  const int x1_idx = g.index_of(x1);

  double diam = 0.0;
  for (std::size_t a = 0; a < data.target.size(); ++a)
    for (std::size_t b = a + 1; b < data.target.size(); ++b)
      diam = std::max(diam, norm(data.target[a] - data.target[b]));
  const double delta0 = 2.0 * g.h * diam;
  const double bound = stability_bound(g, data.target, cfg.normalization_value);

  SolveReport rep{initial_guess(g, data, cfg)};
  MeshFunction& v = rep.solution;
  {
    const ResidualReport res0 = residual(v, data, st);
    rep.residual_history.push_back(res0.sup);
    rep.final_residual_sup = res0.sup;
    rep.stability_ok = detail::sup_value(v) <= bound + 1e-9;
    rep.converged = res0.sup <= tol;
  }
  for (int sweep = 1; !rep.converged && sweep <= max_sweeps; ++sweep) {
    detail::monotone_sweep(v, data, st, x1_idx, delta0);
    rep.iterations = sweep;
    const ResidualReport res = residual(v, data, st);
    rep.residual_history.push_back(res.sup);
    rep.final_residual_sup = res.sup;
    rep.stability_ok = rep.stability_ok && detail::sup_value(v) <= bound + 1e-9;
    rep.converged = res.sup <= tol;
  }
  if (rep.converged) rep.converged = is_discrete_convex(v, st).convex;
  return rep;
}

inline SolveReport solve_newton(const Grid& g, const ProblemData& data,
                                const Stencil& st, const SolverConfig& cfg = {}) {
  detail::require_nondegenerate(data);
  const double tol = detail::effective_tol(data, cfg);
  const int max_steps = cfg.max_iterations > 0 ? cfg.max_iterations : 60;
  if (!(cfg.newton_damping > 0.0 && cfg.newton_damping <= 1.0))
    throw std::invalid_argument("solve: newton_damping must lie in (0, 1]");
  const double lam0 = cfg.newton_damping;
  const double t_fd = (cfg.fd_step > 0.0 ? cfg.fd_step : 1e-6) * g.h;
  const GridIndex x1 = resolve_normalization_site(g, cfg);
  const int x1_idx = g.index_of(x1);
  const int n = static_cast<int>(g.size());
  const int m = n - 1;  // unknowns: every site except x1
  const auto col_of = [x1_idx](int k) { return k < x1_idx ? k : k - 1; };
  const double bound = stability_bound(g, data.target, cfg.normalization_value);

  double diam = 0.0;
  for (std::size_t a = 0; a < data.target.size(); ++a)
    for (std::size_t b = a + 1; b < data.target.size(); ++b)
      diam = std::max(diam, norm(data.target[a] - data.target[b]));
  const double delta0 = 2.0 * g.h * diam;

  // sites whose stencil reaches a given exterior point
  struct ExtUsers {
    GridIndex z;
    std::vector<int> sites;
  };
  std::unordered_map<std::uint64_t, ExtUsers> users;
  for (int k = 0; k < n; ++k)
    for (const GridIndex& e : st.directions) {
      const GridIndex z = g.sites[k] - e;
      if (!g.contains(z)) {
        auto& u = users[detail::pack_index(z)];
        u.z = z;
        u.sites.push_back(k);
      }
    }

  SolveReport rep{initial_guess(g, data, cfg)};
  MeshFunction& v = rep.solution;
  ResidualReport res = residual(v, data, st);
  rep.residual_history.push_back(res.sup);
  rep.final_residual_sup = res.sup;
  rep.stability_ok = detail::sup_value(v) <= bound + 1e-9;
  rep.converged = res.sup <= tol;

  for (int step = 1; !rep.converged && step <= max_steps; ++step) {
    rep.iterations = step;

    // group the exterior points by their minimizing boundary site; raising
    // any other site cannot change the extension there
    std::unordered_map<int, std::vector<const ExtUsers*>> by_best;
    for (const auto& [key, u] : users)
      by_best[v.extension_witness(u.z).best_site].push_back(&u);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) *
                 (st.directions.size() + 4));
    std::vector<char> mark(static_cast<std::size_t>(n), 0);
    std::vector<int> rows;
    for (int yk = 0; yk < n; ++yk) {
      if (yk == x1_idx) continue;
      rows.clear();
      const auto add_row = [&](int r) {
        if (r >= 0 && r != x1_idx && !mark[static_cast<std::size_t>(r)]) {
          mark[static_cast<std::size_t>(r)] = 1;
          rows.push_back(r);
        }
      };
      add_row(yk);
      for (const GridIndex& e : st.directions) add_row(g.index_of(g.sites[yk] + e));
      if (g.is_boundary(yk)) {
        const auto it = by_best.find(yk);
        if (it != by_best.end())
          for (const ExtUsers* u : it->second)
            for (int r : u->sites) add_row(r);
      }
      for (int r : rows) {
        mark[static_cast<std::size_t>(r)] = 0;
        const double w = detail::shifted_mass(v, g.sites[r], yk, t_fd, st,
                                              data.target_r, data.quadrature_order);
        const double deriv = (w - res.omega[r]) / t_fd;
        if (std::isfinite(deriv) && deriv != 0.0)
          trip.emplace_back(col_of(r), col_of(yk), deriv);
      }
    }

    // a factorizable step needs every row and column structurally present;
    // early iterates have empty cells and insensitive rows, which SparseLU
    // handles badly — skip straight to the monotone fallback then
    bool structural = trip.size() >= static_cast<std::size_t>(m);
    if (structural) {
      std::vector<char> row_seen(static_cast<std::size_t>(m), 0);
      std::vector<char> col_seen(static_cast<std::size_t>(m), 0);
      for (const auto& t : trip) {
        row_seen[static_cast<std::size_t>(t.row())] = 1;
        col_seen[static_cast<std::size_t>(t.col())] = 1;
      }
      for (int k = 0; k < m && structural; ++k)
        structural = row_seen[static_cast<std::size_t>(k)] &&
                     col_seen[static_cast<std::size_t>(k)];
    }

    bool stepped = false;
    if (structural) try {
        Eigen::SparseMatrix<double> jac(m, m);
        jac.setFromTriplets(trip.begin(), trip.end());
        Eigen::VectorXd rhs(m);
        for (int k = 0; k < n; ++k)
          if (k != x1_idx) rhs[col_of(k)] = -res.residual[k];

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(jac);
        if (lu.info() == Eigen::Success) {
          const Eigen::VectorXd dir = lu.solve(rhs);
          if (lu.info() == Eigen::Success && dir.allFinite()) {
            double lam = lam0;
            for (int ls = 0; ls < 40; ++ls, lam *= 0.5) {
              MeshFunction trial = v;
              std::vector<double> vals = v.values();
              for (int k = 0; k < n; ++k)
                if (k != x1_idx) vals[k] += lam * dir[col_of(k)];
              trial.set_values(std::move(vals));
              ResidualReport res_t = residual(trial, data, st);
              if (res_t.sup < res.sup) {
                v = trial;
                res = std::move(res_t);
                stepped = true;
                break;
              }
            }
          }
        }
      } catch (const std::bad_alloc&) {
        stepped = false;
      }
    if (!stepped) {
      // singular or stalled: fall back to one monotone pass
      detail::monotone_sweep(v, data, st, x1_idx, delta0);
      res = residual(v, data, st);
    }
    rep.residual_history.push_back(res.sup);
    rep.final_residual_sup = res.sup;
    rep.stability_ok = rep.stability_ok && detail::sup_value(v) <= bound + 1e-9;
    rep.converged = res.sup <= tol;
  }

  if (rep.converged) rep.converged = is_discrete_convex(v, st).convex;
  return rep;
}

inline SolveReport solve(const Grid& g, const ProblemData& data, const Stencil& st,
                         const SolverConfig& cfg = {}) {
  return cfg.method == SolveMethod::monotone ? solve_monotone(g, data, st, cfg)
                                             : solve_newton(g, data, st, cfg);
}

// Solve twice with normalization values alpha and alpha + shift at the same
// site; for a unique discrete solution the two differ by exactly that shift.
inline double check_uniqueness(const Grid& g, const ProblemData& data,
                               const Stencil& st, SolverConfig cfg = {},
                               double shift = 5.0) {
  const SolveReport a = solve(g, data, st, cfg);
  cfg.normalization_value += shift;
  const SolveReport b = solve(g, data, st, cfg);
  if (!a.converged || !b.converged)
    throw std::runtime_error("check_uniqueness: a solve did not converge");
  double sup = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    sup = std::max(sup,
                   std::abs(b.solution[static_cast<int>(k)] -
                            a.solution[static_cast<int>(k)] - shift));
  return sup;
}

}  // namespace ampere
