#pragma once

#include <cstdint>
#include <limits>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ampere/lattice.hpp"

namespace ampere {

namespace detail {

// max_j d . a*_j over the vertices of the target; support function without
// the zero-direction guard (d = 0 legitimately occurs at cone apexes)
inline double max_vertex_dot(const Polygon& target, Vec2 d) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec2& a : target.v) best = std::max(best, dot(d, a));
  return best;
}

}  // namespace detail

// k_{p,mu}(x) = max_j (x - p) . a*_j + mu
struct ConeFunction {
  Vec2 apex;
  double level = 0.0;
  Polygon target;

  double operator()(Vec2 x) const {
    return detail::max_vertex_dot(target, x - apex) + level;
  }
};

inline double cone_value(const ConeFunction& cone, Vec2 x) { return cone(x); }

// best/runner-up of the extension minimum at an exterior point; best_site
// indexes into grid.sites, second_val is the minimum excluding best_site
struct ExtensionWitness {
  int best_site = -1;
  double best_val = std::numeric_limits<double>::infinity();
  double second_val = std::numeric_limits<double>::infinity();
};

// grid function with values on Omega_h, evaluated beyond the grid through the
// extension formula v(x) = min_{y in boundary layer} ( v(y) + max_j (x-y).a*_j )
class MeshFunction {
 public:
  MeshFunction(const Grid& grid, Polygon target)
      : grid_(&grid), target_(std::move(target)), values_(grid.size(), 0.0) {
    validate_polygon(target_, "mesh function target");
  }

  MeshFunction(const MeshFunction& o)
      : grid_(o.grid_), target_(o.target_), values_(o.values_), version_(o.version_) {}

  MeshFunction& operator=(const MeshFunction& o) {
    if (this != &o) {
      grid_ = o.grid_;
      target_ = o.target_;
      values_ = o.values_;
      ++version_;
      std::lock_guard<std::mutex> lk(mu_);
      cache_.clear();
      cache_version_ = version_;
    }
    return *this;
  }

  const Grid& grid() const { return *grid_; }
  const Polygon& target() const { return target_; }
  const std::vector<double>& values() const { return values_; }
  std::uint64_t version() const { return version_; }

  double operator[](int site_index) const { return values_[site_index]; }

  void set(int site_index, double v) {
    values_[site_index] = v;
    ++version_;
  }

  void set_values(std::vector<double> v) {
    values_ = std::move(v);
    ++version_;
  }

  template <class F>
  void sample(F&& f) {
    for (std::size_t k = 0; k < values_.size(); ++k)
      values_[k] = f(grid_->position(grid_->sites[k]));
    ++version_;
  }

  // stored value on the grid, extension formula beyond it
  double eval(GridIndex x) const {
    const int idx = grid_->index_of(x);
    if (idx >= 0) return values_[idx];
    return extension(x);
  }

  double extension(GridIndex x) const {
    const std::uint64_t key = detail::pack_index(x);
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (cache_version_ == version_) {
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
      }
    }
    const double val = extension_witness(x).best_val;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (cache_version_ != version_) {
        cache_.clear();
        cache_version_ = version_;
      }
      cache_.emplace(key, val);
    }
    return val;
  }

  // ties keep the earlier boundary site (row-major enumeration)
  ExtensionWitness extension_witness(GridIndex x) const {
    const Vec2 px = grid_->position(x);
    ExtensionWitness w;
    for (int b : grid_->boundary_layer) {
      const double c =
          values_[b] + detail::max_vertex_dot(target_, px - grid_->position(grid_->sites[b]));
      if (c < w.best_val) {
        w.second_val = w.best_val;
        w.best_val = c;
        w.best_site = b;
      } else if (c < w.second_val) {
        w.second_val = c;
      }
    }
    return w;
  }

  // max_j (x - y_site) . a*_j : the site's contribution to the extension at x
  double boundary_offset(GridIndex x, int site_index) const {
    return detail::max_vertex_dot(
        target_, grid_->position(x) - grid_->position(grid_->sites[site_index]));
  }

 private:
  const Grid* grid_;
  Polygon target_;
  std::vector<double> values_;
  std::uint64_t version_ = 0;

  mutable std::mutex mu_;
  mutable std::unordered_map<std::uint64_t, double> cache_;
  mutable std::uint64_t cache_version_ = 0;
};

// Delta_{he} v(x) = v(x+he) - 2 v(x) + v(x-he), exterior neighbors extended
inline double second_difference(const MeshFunction& fn, GridIndex x, GridIndex e) {
  return fn.eval(x + e) - 2.0 * fn.eval(x) + fn.eval(x - e);
}

struct ConvexityReport {
  bool convex = true;
  GridIndex site{0, 0};
  GridIndex direction{0, 0};
  double value = 0.0;  // the offending second difference
};

// Delta_{he} v >= 0 up to rounding for every site and stencil direction;
// reports the first violation in (row-major site, stencil-order direction)
inline ConvexityReport is_discrete_convex(const MeshFunction& fn, const Stencil& stencil,
                                          double tol = 1e-10) {
  for (const GridIndex& x : fn.grid().sites)
    for (const GridIndex& e : stencil.directions) {
      const double d = second_difference(fn, x, e);
      if (d < -tol) return {false, x, e, d};
    }
  return {};
}

}  // namespace ampere
