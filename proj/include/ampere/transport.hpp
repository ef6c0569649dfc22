#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ampere/parallel.hpp"
#include "ampere/solver.hpp"

namespace ampere {

// continuous solution of the transport problem, for desk-scale error studies
struct ExactSolution {
  std::function<double(Vec2)> u;
  std::function<Vec2(Vec2)> grad_u;
  std::string description;
};

// worst central-difference mismatch of grad_u against u over the points
inline double gradient_inconsistency(const ExactSolution& ex,
                                     const std::vector<Vec2>& pts,
                                     double step = 1e-6) {
  double worst = 0.0;
  for (const Vec2& p : pts) {
    const double gx =
        (ex.u({p.x + step, p.y}) - ex.u({p.x - step, p.y})) / (2.0 * step);
    const double gy =
        (ex.u({p.x, p.y + step}) - ex.u({p.x, p.y - step})) / (2.0 * step);
    const Vec2 g = ex.grad_u(p);
    worst = std::max(worst, std::max(std::abs(gx - g.x), std::abs(gy - g.y)));
  }
  return worst;
}

// a ready-to-instantiate problem with its continuous solution attached
struct Benchmark {
  std::string name;
  Polygon domain;
  Polygon target;  // closure of the gradient image, K* = Omega*-bar
  Density source_f;
  Density target_r;
  ExactSolution exact;
};

// u = |x|^2/2: the identity map on the unit square, f = R = 1
inline Benchmark quadratic_benchmark() {
  const Polygon sq = make_box({0.0, 0.0}, {1.0, 1.0});
  return {"quadratic",
          sq,
          sq,
          Density::constant(1.0, sq),
          Density::constant(1.0, sq),
          {[](Vec2 p) { return 0.5 * norm2(p); }, [](Vec2 p) { return p; },
           "u = |x|^2/2 on (0,1)^2, gradient image (0,1)^2"}};
}

// u = (2x1^2 + x2^2)/2 stretches the unit square onto (0,2)x(0,1), f = 2
inline Benchmark anisotropic_benchmark() {
  const Polygon sq = make_box({0.0, 0.0}, {1.0, 1.0});
  const Polygon rect = make_box({0.0, 0.0}, {2.0, 1.0});
  return {"anisotropic",
          sq,
          rect,
          Density::constant(2.0, sq),
          Density::constant(1.0, rect),
          {[](Vec2 p) { return p.x * p.x + 0.5 * p.y * p.y; },
           [](Vec2 p) { return Vec2{2.0 * p.x, p.y}; },
           "u = (2x1^2 + x2^2)/2 on (0,1)^2, gradient image (0,2)x(0,1)"}};
}

// u = |x|^2/2 + b.x: identity plus a shift, target translated by b
inline Benchmark translated_benchmark(Vec2 b = {0.5, 0.25}) {
  const Polygon sq = make_box({0.0, 0.0}, {1.0, 1.0});
  const Polygon shifted = make_box(b, {b.x + 1.0, b.y + 1.0});
  return {"translated",
          sq,
          shifted,
          Density::constant(1.0, sq),
          Density::constant(1.0, shifted),
          {[b](Vec2 p) { return 0.5 * norm2(p) + dot(b, p); },
           [b](Vec2 p) { return p + b; },
           "u = |x|^2/2 + b.x on (0,1)^2, gradient image b + (0,1)^2"}};
}

// u = x1^2 + x1 x2 + x2^2 maps the unit square onto a parallelogram whose
// edge normals are NOT canonical lattice directions; the lattice cells do
// not reproduce the sampled solution, so this problem carries genuine
// discretization error (unlike the box-target benchmarks)
inline Benchmark skewed_benchmark() {
  const Polygon sq = make_box({0.0, 0.0}, {1.0, 1.0});
  const Polygon para{{{0.0, 0.0}, {2.0, 1.0}, {3.0, 3.0}, {1.0, 2.0}}};
  return {"skewed",
          sq,
          para,
          Density::constant(3.0, sq),
          Density::constant(1.0, para),
          {[](Vec2 p) { return p.x * p.x + p.x * p.y + p.y * p.y; },
           [](Vec2 p) { return Vec2{2.0 * p.x + p.y, p.x + 2.0 * p.y}; },
           "u = x1^2 + x1 x2 + x2^2 on (0,1)^2, gradient image a parallelogram"}};
}

inline Benchmark benchmark_by_name(const std::string& name) {
  if (name == "quadratic") return quadratic_benchmark();
  if (name == "anisotropic") return anisotropic_benchmark();
  if (name == "translated") return translated_benchmark();
  if (name == "skewed") return skewed_benchmark();
  throw std::invalid_argument("benchmark_by_name: unknown benchmark '" + name +
                              "' (quadratic, anisotropic, translated, skewed)");
}

struct BenchmarkInstance {
  Grid grid;
  Stencil stencil;
  ProblemData data;
};

inline BenchmarkInstance instantiate(const Benchmark& b, double h, int radius,
                                     int quadrature_order = 5) {
  Grid grid = build_grid(h, b.domain);
  Stencil st = build_stencil(radius, b.target);
  const auto part = build_partition(grid);
  ProblemData data = make_problem_data(b.source_f, b.target_r, b.target, grid,
                                       part, quadrature_order);
  return {std::move(grid), std::move(st), std::move(data)};
}

// centroid of the discrete subdifferential; the canonical single-valued
// selection, exact on quadratics away from the boundary
inline std::optional<Vec2> select_gradient(const MeshFunction& fn, GridIndex x,
                                           const Stencil& st) {
  const Region cell = subdifferential_cell(fn, x, st);
  if (cell.kind != RegionKind::polygon) return std::nullopt;
  return polygon_centroid(cell.poly);
}

// max over grid sites of |fn - u|; with normalize the mean discrepancy is
// removed first, since solutions match only up to an additive constant
inline double sup_error(const MeshFunction& fn, const ExactSolution& exact,
                        bool normalize) {
  const Grid& g = fn.grid();
  const int n = static_cast<int>(g.size());
  double mean = 0.0;
  if (normalize) {
    for (int k = 0; k < n; ++k)
      mean += fn[k] - exact.u(g.position(g.sites[k]));
    mean /= n;
  }
  double sup = 0.0;
  for (int k = 0; k < n; ++k)
    sup = std::max(sup,
                   std::abs(fn[k] - exact.u(g.position(g.sites[k])) - mean));
  return sup;
}

// max over grid sites of |select_gradient - grad_u|; sites with empty cells
// (no selection) are skipped
inline double sup_error_grad(const MeshFunction& fn, const ExactSolution& exact,
                             const Stencil& st) {
  const Grid& g = fn.grid();
  double sup = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const GridIndex x = g.sites[k];
    const std::optional<Vec2> p = select_gradient(fn, x, st);
    if (!p) continue;
    sup = std::max(sup, norm(*p - exact.grad_u(g.position(x))));
  }
  return sup;
}

struct StudyRow {
  double h = 0.0;
  int radius = 0;
  double err_u = 0.0;
  double err_grad = 0.0;
  double order_u = 0.0;     // log2(err(2h)/err(h)); 0 when not a halving step
  double order_grad = 0.0;  // same convention
  int iterations = 0;
  double seconds = 0.0;
  bool converged = false;
};

struct StudyResult {
  std::vector<StudyRow> rows;
};

namespace detail {

inline double observed_order(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) return 0.0;
  return std::log2(coarse / fine);
}

}  // namespace detail

// solve every (radius, h) instance and tabulate errors against the exact
// solution; a non-converged instance flags its row and the study continues
inline StudyResult convergence_study(const Benchmark& b,
                                     const std::vector<double>& h_list,
                                     const std::vector<int>& radius_list,
                                     const SolverConfig& config = {},
                                     int quadrature_order = 5,
                                     int threads = 1) {
  if (h_list.empty())
    throw std::invalid_argument("convergence_study: empty h list");
  StudyResult out;
  out.rows.resize(radius_list.size() * h_list.size());
  // every (radius, h) instance is independent; rows land at fixed positions,
  // so a threaded run produces the exact table a serial run would
  parallel_for(out.rows.size(), threads, [&](std::size_t k) {
    StudyRow row;
    row.radius = radius_list[k / h_list.size()];
    row.h = h_list[k % h_list.size()];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const BenchmarkInstance inst =
          instantiate(b, row.h, row.radius, quadrature_order);
      const SolveReport rep = solve(inst.grid, inst.data, inst.stencil, config);
      row.iterations = rep.iterations;
      row.converged = rep.converged;
      row.err_u = sup_error(rep.solution, b.exact, true);
      row.err_grad = sup_error_grad(rep.solution, b.exact, inst.stencil);
    } catch (const std::exception&) {
      row.converged = false;
      row.err_u = std::numeric_limits<double>::quiet_NaN();
      row.err_grad = std::numeric_limits<double>::quiet_NaN();
    }
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    out.rows[k] = row;
  });
  // observed orders compare consecutive rows of one radius block and only
  // make sense across an exact halving of h
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    if (k % h_list.size() == 0) continue;
    StudyRow& row = out.rows[k];
    const StudyRow& prev = out.rows[k - 1];
    if (std::abs(prev.h - 2.0 * row.h) <= 1e-12 * row.h + 1e-300) {
      row.order_u = detail::observed_order(prev.err_u, row.err_u);
      row.order_grad = detail::observed_order(prev.err_grad, row.err_grad);
    }
  }
  return out;
}

struct RefinementRow {
  int index = 0;
  double epsilon = 0.0;
  double hausdorff = 0.0;  // distance from this target to Omega*-bar
  double diff_prev = 0.0;  // sup |u_m - u_{m-1}|; 0 for the first row
  int iterations = 0;
  double seconds = 0.0;
  bool converged = false;
};

struct RefinementResult {
  std::vector<RefinementRow> rows;
};

// solve the same problem against an increasing family of polygonal targets
// K*_1 <= K*_2 <= ... <= Omega*-bar, recording the mass correction, the
// Hausdorff gap, and the uniform change between consecutive solutions
inline RefinementResult target_refinement_study(
    const Polygon& omega_star, const std::vector<Polygon>& targets,
    const Polygon& domain, const Density& source_f, const Density& target_r,
    double h, int radius, const SolverConfig& config = {},
    int quadrature_order = 5) {
  if (targets.empty())
    throw std::invalid_argument("target_refinement_study: empty target list");

  double scale = 1.0;
  for (const Vec2& q : omega_star.v)
    scale = std::max({scale, std::abs(q.x), std::abs(q.y)});
  const double tol = 1e-9 * scale;
  const auto inside = [tol](const Polygon& inner, const Polygon& outer) {
    for (const Vec2& q : inner.v)
      if (!contains_point(outer, q, tol)) return false;
    return true;
  };
  for (std::size_t m = 0; m + 1 < targets.size(); ++m)
    if (!inside(targets[m], targets[m + 1]))
      throw std::invalid_argument(
          "target_refinement_study: targets are not nested");
  for (const Polygon& t : targets)
    if (!inside(t, omega_star))
      throw std::invalid_argument(
          "target_refinement_study: a target leaves the prescribed image");

  const Grid grid = build_grid(h, domain);
  const auto part = build_partition(grid);

  RefinementResult out;
  const MeshFunction* prev = nullptr;
  std::optional<MeshFunction> kept;
  for (std::size_t m = 0; m < targets.size(); ++m) {
    RefinementRow row;
    row.index = static_cast<int>(m);
    row.hausdorff = hausdorff_distance(targets[m], omega_star);
    const auto t0 = std::chrono::steady_clock::now();
    const Stencil st = build_stencil(radius, targets[m]);
    const ProblemData data = make_problem_data(source_f, target_r, targets[m],
                                               grid, part, quadrature_order);
    row.epsilon = data.epsilon;
    const SolveReport rep = solve(grid, data, st, config);
    row.iterations = rep.iterations;
    row.converged = rep.converged;
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (prev) {
      double d = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k)
        d = std::max(d, std::abs(rep.solution[static_cast<int>(k)] -
                                 (*prev)[static_cast<int>(k)]));
      row.diff_prev = d;
    }
    kept = rep.solution;
    prev = &*kept;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace ampere
