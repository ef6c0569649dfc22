#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ampere/lattice.hpp"
#include "oracles.hpp"

using namespace ampere;

namespace {

Polygon unit_square() { return make_box({0, 0}, {1, 1}); }

std::set<std::pair<int, int>> direction_set(const Stencil& st) {
  std::set<std::pair<int, int>> s;
  for (const auto& e : st.directions) s.insert({e.i, e.j});
  return s;
}

Polygon pentagon() {
  return Polygon{{0.1, 0.0}, {1.3, 0.2}, {1.5, 1.1}, {0.6, 1.6}, {-0.2, 0.9}};
}

}  // namespace

TEST_CASE("grid on the unit square at h=1/2 has a single site") {
  const Grid g = build_grid(0.5, unit_square());
  REQUIRE(g.size() == 1);
  REQUIRE(g.sites[0] == GridIndex{1, 1});
  REQUIRE(norm(g.position(g.sites[0]) - Vec2{0.5, 0.5}) <= 1e-15);
  // a single interior point is its own boundary layer
  REQUIRE(g.boundary_layer.size() == 1);
}

TEST_CASE("grid on the unit square at h=1/4 has 9 sites, 8 in the boundary layer") {
  const Grid g = build_grid(0.25, unit_square());
  REQUIRE(g.size() == 9);
  REQUIRE(g.boundary_layer.size() == 8);
  const int center = g.index_of({2, 2});
  REQUIRE(center >= 0);
  REQUIRE_FALSE(g.is_boundary(center));
  for (std::size_t k = 0; k < g.size(); ++k)
    if (static_cast<int>(k) != center) REQUIRE(g.is_boundary(static_cast<int>(k)));
}

TEST_CASE("too-coarse grids raise the empty-grid error") {
  REQUIRE_THROWS_AS(build_grid(2.0, unit_square()), std::runtime_error);
  REQUIRE_THROWS_AS(build_grid(-0.1, unit_square()), std::invalid_argument);
}

TEST_CASE("grid sites are strictly interior and row-major ordered") {
  for (const Polygon& dom : {unit_square(), pentagon()}) {
    const Grid g = build_grid(0.15, dom);
    REQUIRE(g.size() > 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      REQUIRE(signed_distance_inside(dom, g.position(g.sites[k])) > 0.0);
      if (k > 0) REQUIRE(row_major_less(g.sites[k - 1], g.sites[k]));
    }
    // boundary layer definition: some canonical neighbor missing from the grid
    for (std::size_t k = 0; k < g.size(); ++k) {
      bool expect = false;
      for (const GridIndex& e : canonical_directions)
        if (!g.contains(g.sites[k] + e)) expect = true;
      REQUIRE(g.is_boundary(static_cast<int>(k)) == expect);
    }
  }
}

TEST_CASE("every domain point is near some site once the grid is nonempty") {
  for (double h : {0.25, 0.1}) {
    const Grid g = build_grid(h, unit_square());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
      const Vec2 p{u(rng), u(rng)};
      double best = 1e300;
      for (const auto& s : g.sites) best = std::min(best, norm(p - g.position(s)));
      REQUIRE(best <= h * std::sqrt(2.0) + 1e-12);
    }
  }
}

TEST_CASE("stencil of radius 1 for the unit square") {
  const Stencil st = build_stencil(1, unit_square());
  REQUIRE(st.directions.size() == 8);
  const std::set<std::pair<int, int>> expect = {
      {1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  REQUIRE(direction_set(st) == expect);
  // canonical quadruple leads the enumeration
  REQUIRE(st.directions[0] == GridIndex{1, 0});
  REQUIRE(st.directions[1] == GridIndex{0, 1});
  REQUIRE(st.directions[2] == GridIndex{-1, 0});
  REQUIRE(st.directions[3] == GridIndex{0, -1});
}

TEST_CASE("stencil of radius 2 adds the eight (1,2)-type directions") {
  const Stencil st = build_stencil(2, unit_square());
  REQUIRE(st.directions.size() == 16);
  const auto s = direction_set(st);
  for (auto [a, b] : {std::pair{1, 2}, {2, 1}, {-1, 2}, {2, -1}}) {
    REQUIRE(s.count({a, b}) == 1);
    REQUIRE(s.count({-a, -b}) == 1);
  }
  REQUIRE(s.count({2, 2}) == 0);
  REQUIRE(s.count({2, 0}) == 0);
  REQUIRE(s.count({0, 2}) == 0);
}

TEST_CASE("stencil picks up reduced edge normals of the target") {
  const Polygon tri{{0, 0}, {2, 0}, {0, 1}};
  const Stencil st = build_stencil(1, tri);
  REQUIRE(st.contains({1, 2}));
  REQUIRE(st.contains({-1, -2}));
  REQUIRE(st.directions.size() == 10);
}

TEST_CASE("stencil invariants: symmetry, co-primality, canonical membership") {
  for (int radius : {1, 2, 3}) {
    const Stencil st = build_stencil(radius, Polygon{{0, 0}, {2, 1}, {3, 3}, {1, 2}});
    for (const GridIndex& e : canonical_directions) REQUIRE(st.contains(e));
    for (const GridIndex& e : st.directions) {
      REQUIRE(st.contains(-e));
      REQUIRE(std::gcd(std::abs(e.i), std::abs(e.j)) == 1);
      REQUIRE(!(e.i == 0 && e.j == 0));
    }
  }
}

TEST_CASE("rational-vertex targets are accepted, irrational edges rejected") {
  const Stencil st = build_stencil(1, make_box({0.25, 0.25}, {0.75, 0.75}));
  REQUIRE(st.directions.size() == 8);
  const Polygon bad{{0, 0}, {1, 0}, {std::sqrt(2.0) / 2.0, 1.0 + std::exp(1.0) / 10.0}};
  REQUIRE_THROWS_AS(build_stencil(1, bad), std::invalid_argument);
}

TEST_CASE("partition of the unit square at h=1/4") {
  const Grid g = build_grid(0.25, unit_square());
  const auto cells = build_partition(g);
  REQUIRE(cells.size() == 9);

  double total = 0.0;
  for (const auto& c : cells) total += polygon_area(c.region);
  REQUIRE(std::abs(total - 1.0) <= 1e-10);

  const int center = g.index_of({2, 2});
  REQUIRE(std::abs(polygon_area(cells[center].region) - 0.0625) <= 1e-12);

  const int corner = g.index_of({1, 1});
  REQUIRE(std::abs(polygon_area(cells[corner].region) - 0.140625) <= 1e-12);
}

TEST_CASE("partition cells meet the lattice only at their own site") {
  const Grid g = build_grid(0.25, unit_square());
  const auto cells = build_partition(g);
  for (std::size_t a = 0; a < cells.size(); ++a) {
    REQUIRE(signed_distance_inside(cells[a].region, g.position(cells[a].site)) >= 0.0);
    for (std::size_t b = 0; b < cells.size(); ++b)
      if (a != b)
        REQUIRE(signed_distance_inside(cells[a].region, g.position(cells[b].site)) < 0.0);
  }
}

TEST_CASE("partition cells overlap only in measure zero") {
  const Grid g = build_grid(0.25, unit_square());
  const auto cells = build_partition(g);
  for (std::size_t a = 0; a < cells.size(); ++a)
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      const Polygon common = intersect_polygons(cells[a].region, cells[b].region);
      if (common.size() >= 3) REQUIRE(polygon_area(common) < 1e-12);
    }
}

TEST_CASE("single-site partition covers the whole domain") {
  const Grid g = build_grid(0.5, unit_square());
  const auto cells = build_partition(g);
  REQUIRE(cells.size() == 1);
  REQUIRE(std::abs(polygon_area(cells[0].region) - 1.0) <= 1e-12);
}

TEST_CASE("partition on a convex pentagon tiles and respects nearest sites") {
  const Grid g = build_grid(0.2, pentagon());
  const auto cells = build_partition(g);

  double total = 0.0;
  for (const auto& c : cells) total += polygon_area(c.region);
  REQUIRE(std::abs(total - polygon_area(pentagon())) <= 1e-10);

  // sampled points belong to the cell of (one of) their nearest sites
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-0.2, 1.5), uy(0.0, 1.6);
  int tested = 0;
  while (tested < 200) {
    const Vec2 p{ux(rng), uy(rng)};
    if (signed_distance_inside(pentagon(), p) <= 1e-9) continue;
    ++tested;
    double best = 1e300;
    for (const auto& s : g.sites) best = std::min(best, norm(p - g.position(s)));
    for (std::size_t k = 0; k < cells.size(); ++k)
      if (signed_distance_inside(cells[k].region, p) > 1e-9)
        REQUIRE(norm(p - g.position(cells[k].site)) <= best + 1e-9);
  }
}
