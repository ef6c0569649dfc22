#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "ampere/geometry.hpp"

namespace ampere {

// lattice point m, physical position m*h
struct GridIndex {
  int i = 0;
  int j = 0;
  friend bool operator==(GridIndex a, GridIndex b) { return a.i == b.i && a.j == b.j; }
  friend bool operator!=(GridIndex a, GridIndex b) { return !(a == b); }
};

inline GridIndex operator+(GridIndex a, GridIndex b) { return {a.i + b.i, a.j + b.j}; }
inline GridIndex operator-(GridIndex a, GridIndex b) { return {a.i - b.i, a.j - b.j}; }
inline GridIndex operator-(GridIndex a) { return {-a.i, -a.j}; }

// scan order: rows of constant j, increasing i within a row
inline bool row_major_less(GridIndex a, GridIndex b) {
  if (a.j != b.j) return a.j < b.j;
  return a.i < b.i;
}

namespace detail {

inline std::uint64_t pack_index(GridIndex g) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(g.i)) << 32) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(g.j));
}

}  // namespace detail

// canonical basis directions r_1, r_2 and their negatives
inline constexpr GridIndex canonical_directions[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

struct Grid {
  double h = 0.0;
  Polygon domain;                   // convex Omega
  std::vector<GridIndex> sites;     // Omega_h, row-major
  std::vector<char> boundary;       // parallel to sites; 1 if in the boundary layer
  std::vector<int> boundary_layer;  // positions into sites, row-major
  std::unordered_map<std::uint64_t, int> lookup;

  Vec2 position(GridIndex g) const { return {h * g.i, h * g.j}; }
  std::size_t size() const { return sites.size(); }

  int index_of(GridIndex g) const {
    auto it = lookup.find(detail::pack_index(g));
    return it == lookup.end() ? -1 : it->second;
  }
  bool contains(GridIndex g) const { return index_of(g) >= 0; }
  bool is_boundary(int site_index) const { return boundary[site_index] != 0; }
};

inline Grid build_grid(double h, const Polygon& domain) {
  if (!(h > 0.0)) throw std::invalid_argument("build_grid: h must be positive");
  validate_polygon(domain, "build_grid domain");

  Grid g;
  g.h = h;
  g.domain = domain;

  double xmin = domain[0].x, xmax = domain[0].x;
  double ymin = domain[0].y, ymax = domain[0].y;
  double scale = 1.0;
  for (const Vec2& v : domain.v) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
    scale = std::max({scale, std::abs(v.x), std::abs(v.y)});
  }
  const double tol = 1e-9 * scale;  // strict interior: keep sd > tol

  const int i_lo = static_cast<int>(std::floor(xmin / h)) - 1;
  const int i_hi = static_cast<int>(std::ceil(xmax / h)) + 1;
  const int j_lo = static_cast<int>(std::floor(ymin / h)) - 1;
  const int j_hi = static_cast<int>(std::ceil(ymax / h)) + 1;

  for (int j = j_lo; j <= j_hi; ++j)
    for (int i = i_lo; i <= i_hi; ++i) {
      const GridIndex m{i, j};
      if (signed_distance_inside(domain, {h * i, h * j}) > tol) {
        g.lookup.emplace(detail::pack_index(m), static_cast<int>(g.sites.size()));
        g.sites.push_back(m);
      }
    }

  if (g.sites.empty())
    throw std::runtime_error("build_grid: mesh size admits no interior lattice point");

  g.boundary.assign(g.sites.size(), 0);
  for (std::size_t k = 0; k < g.sites.size(); ++k) {
    for (const GridIndex& e : canonical_directions)
      if (!g.contains(g.sites[k] + e)) {
        g.boundary[k] = 1;
        g.boundary_layer.push_back(static_cast<int>(k));
        break;
      }
  }
  return g;
}

struct Stencil {
  std::vector<GridIndex> directions;
  int radius = 1;

  bool contains(GridIndex e) const {
    return std::find(directions.begin(), directions.end(), e) != directions.end();
  }
};

namespace detail {

// smallest integer vector parallel to d, or empty when no multiple k <= 64 of
// the unit-scaled direction is integral (edge direction not rational at a
// representable scale); only the direction matters -- the edge length may be
// irrational, as for targets dilated by regularize_degenerate
inline std::vector<GridIndex> rational_direction(Vec2 d) {
  const double mag = std::max(std::abs(d.x), std::abs(d.y));
  if (!(mag > 0.0)) return {};
  d.x /= mag;
  d.y /= mag;
  for (int k = 1; k <= 64; ++k) {
    const double sx = k * d.x, sy = k * d.y;
    const double rx = std::round(sx), ry = std::round(sy);
    if (std::abs(sx - rx) <= 1e-7 * k && std::abs(sy - ry) <= 1e-7 * k) {
      long long a = static_cast<long long>(rx), b = static_cast<long long>(ry);
      const long long g = std::gcd(std::llabs(a), std::llabs(b));
      if (g == 0) return {};
      return {GridIndex{static_cast<int>(a / g), static_cast<int>(b / g)}};
    }
  }
  return {};
}

}  // namespace detail

inline Stencil build_stencil(int radius, const Polygon& target) {
  if (radius < 1) throw std::invalid_argument("build_stencil: radius must be >= 1");
  validate_polygon(target, "build_stencil target");

  Stencil st;
  st.radius = radius;
  // canonical quadruple first, then the remaining co-prime vectors in
  // lexicographic order; keeps convexity witnesses deterministic
  for (const GridIndex& e : canonical_directions) st.directions.push_back(e);
  for (int i = -radius; i <= radius; ++i)
    for (int j = -radius; j <= radius; ++j) {
      const GridIndex e{i, j};
      if (i == 0 && j == 0) continue;
      if (std::gcd(std::abs(i), std::abs(j)) != 1) continue;
      if (!st.contains(e)) st.directions.push_back(e);
    }

  for (std::size_t k = 0; k < target.size(); ++k) {
    const Vec2 d = target[(k + 1) % target.size()] - target[k];
    const auto reduced = detail::rational_direction(d);
    if (reduced.empty())
      throw std::invalid_argument(
          "build_stencil: target edge direction is not rational; use a lattice "
          "polygon (integer or rational vertices)");
    const GridIndex n{reduced[0].j, -reduced[0].i};  // edge normal, reduced
    if (!st.contains(n)) st.directions.push_back(n);
    if (!st.contains(-n)) st.directions.push_back(-n);
  }
  return st;
}

struct PartitionCell {
  GridIndex site;
  Polygon region;  // E_x, a convex subset of the closed domain
};

namespace detail {

inline Polygon voronoi_cell(const Grid& grid, int k, const std::vector<int>& neighbors) {
  const Vec2 x = grid.position(grid.sites[k]);
  Polygon cell = grid.domain;
  for (int other : neighbors) {
    if (other == k) continue;
    const Vec2 y = grid.position(grid.sites[other]);
    const Vec2 n = x - y;
    cell = clip_polygon(cell, {n, 0.5 * dot(n, x + y)});
    if (cell.size() < 3) break;
  }
  canonicalize_polygon(cell);
  return cell;
}

}  // namespace detail

// E_x: the box x+[-h/2,h/2]^2 clipped to the closed domain, with uncovered
// boundary slivers attached to the nearest site -- realized directly as the
// Voronoi diagram of the sites restricted to the domain
inline std::vector<PartitionCell> build_partition(const Grid& grid) {
  const int m = static_cast<int>(grid.size());
  std::vector<PartitionCell> cells(m);

  auto fill = [&](bool local) {
    for (int k = 0; k < m; ++k) {
      std::vector<int> neighbors;
      if (local) {
        for (int dj = -3; dj <= 3; ++dj)
          for (int di = -3; di <= 3; ++di) {
            const int idx = grid.index_of(grid.sites[k] + GridIndex{di, dj});
            if (idx >= 0 && idx != k) neighbors.push_back(idx);
          }
      } else {
        for (int idx = 0; idx < m; ++idx)
          if (idx != k) neighbors.push_back(idx);
      }
      cells[k] = {grid.sites[k], detail::voronoi_cell(grid, k, neighbors)};
    }
    double total = 0.0;
    for (const auto& c : cells) total += polygon_area(c.region);
    return total;
  };

  const double area = polygon_area(grid.domain);
  // local neighborhoods suffice unless the domain has long thin features;
  // the exact area identity detects that and triggers the full recompute
  if (std::abs(fill(true) - area) > 1e-10 * std::max(1.0, area)) fill(false);
  return cells;
}

}  // namespace ampere
