#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ampere {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return s * a; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }  // rotate 90 degrees ccw

// Closed half-plane {p : normal.p >= offset}.
struct HalfPlane {
  Vec2 normal;
  double offset = 0.0;
};

// Convex polygon, vertices in counter-clockwise order, no duplicate or
// collinear vertices once canonicalized.
struct Polygon {
  std::vector<Vec2> v;

  Polygon() = default;
  explicit Polygon(std::vector<Vec2> verts) : v(std::move(verts)) {}
  Polygon(std::initializer_list<Vec2> verts) : v(verts) {}

  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }
  Vec2& operator[](std::size_t i) { return v[i]; }
  Vec2 operator[](std::size_t i) const { return v[i]; }
};

inline Polygon make_box(Vec2 lo, Vec2 hi) {
  return Polygon{{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}};
}

inline double polygon_area(const Polygon& p) {
  const std::size_t n = p.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += cross(p[i], p[(i + 1) % n]);
  return 0.5 * s;
}

inline Vec2 polygon_centroid(const Polygon& p) {
  const std::size_t n = p.size();
  if (n == 0) throw std::invalid_argument("polygon_centroid: empty polygon");
  double a2 = 0.0;
  Vec2 c{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 u = p[i], w = p[(i + 1) % n];
    const double cr = cross(u, w);
    a2 += cr;
    c = c + cr * (u + w);
  }
  if (std::abs(a2) < 1e-300) {  // degenerate: fall back to vertex mean
    Vec2 m{0.0, 0.0};
    for (const Vec2& q : p.v) m = m + q;
    return (1.0 / static_cast<double>(n)) * m;
  }
  return (1.0 / (3.0 * a2)) * c;
}

// Signed distance to the boundary, positive inside, negative outside.
inline double signed_distance_inside(const Polygon& p, Vec2 q) {
  const std::size_t n = p.size();
  if (n < 3) return -std::numeric_limits<double>::infinity();
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p[i], b = p[(i + 1) % n];
    const Vec2 e = b - a;
    const double len = norm(e);
    if (len < 1e-300) continue;
    d = std::min(d, dot(perp(e), q - a) / len);
  }
  return d;
}

inline bool contains_point(const Polygon& p, Vec2 q, double tol = 1e-12) {
  return signed_distance_inside(p, q) >= -tol;
}

inline double support_function(const Polygon& p, Vec2 dir) {
  if (p.empty()) throw std::invalid_argument("support_function: empty polygon");
  if (norm2(dir) < 1e-300)
    throw std::invalid_argument("support_function: zero direction");
  double s = -std::numeric_limits<double>::infinity();
  for (const Vec2& q : p.v) s = std::max(s, dot(dir, q));
  return s;
}

// Collapse duplicate and collinear vertices.  eps is an absolute point
// tolerance; vertices closer than eps merge, vertices within eps of the line
// through their neighbours are dropped.
inline void canonicalize_polygon(Polygon& p, double eps = 0.0) {
  if (eps <= 0.0) {
    double s = 1.0;
    for (const Vec2& q : p.v) s = std::max({s, std::abs(q.x), std::abs(q.y)});
    eps = 1e-12 * s;
  }
  // merge near-coincident consecutive vertices (wrap-aware)
  std::vector<Vec2> out;
  out.reserve(p.size());
  for (const Vec2& q : p.v) {
    if (out.empty() || norm(q - out.back()) > eps) out.push_back(q);
  }
  while (out.size() >= 2 && norm(out.front() - out.back()) <= eps) out.pop_back();
  // drop vertices lying on the segment through their neighbours
  bool changed = true;
  while (changed && out.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Vec2 a = out[(i + out.size() - 1) % out.size()];
      const Vec2 b = out[i];
      const Vec2 c = out[(i + 1) % out.size()];
      const double base = norm(c - a);
      if (base < 1e-300) continue;
      if (std::abs(cross(c - a, b - a)) / base <= eps) {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (out.size() < 3) out.clear();
  p.v = std::move(out);
}

// One Sutherland-Hodgman pass: keep the part of p inside hp.
inline Polygon clip_polygon(const Polygon& p, const HalfPlane& hp) {
  const std::size_t n = p.size();
  if (n == 0) return {};
  Polygon out;
  out.v.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 P = p[i], Q = p[(i + 1) % n];
    const double dP = dot(hp.normal, P) - hp.offset;
    const double dQ = dot(hp.normal, Q) - hp.offset;
    const bool inP = dP >= 0.0, inQ = dQ >= 0.0;
    if (inP) out.v.push_back(P);
    if (inP != inQ) {
      const double t = dP / (dP - dQ);
      out.v.push_back(P + t * (Q - P));
    }
  }
  if (out.size() < 3) out.v.clear();
  return out;
}

// Intersection of two convex polygons (possibly empty).
inline Polygon intersect_polygons(const Polygon& a, const Polygon& b) {
  if (a.empty() || b.empty()) return {};
  Polygon r = a;
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n && !r.empty(); ++i) {
    const Vec2 p0 = b[i], p1 = b[(i + 1) % n];
    const Vec2 nrm = perp(p1 - p0);
    r = clip_polygon(r, {nrm, dot(nrm, p0)});
  }
  canonicalize_polygon(r);
  if (polygon_area(r) < 1e-14) r.v.clear();
  return r;
}

enum class RegionKind { polygon, empty, unbounded };

struct Region {
  RegionKind kind = RegionKind::empty;
  Polygon poly;
};

namespace detail {

// Vertex tagged with the ids of the two constraint lines meeting there.
// Negative ids are synthetic bounding-box edges.
struct TaggedVert {
  Vec2 p;
  int a = INT32_MIN;
  int b = INT32_MIN;
};

inline int common_tag(const TaggedVert& P, const TaggedVert& Q) {
  if (P.a != INT32_MIN && (P.a == Q.a || P.a == Q.b)) return P.a;
  if (P.b != INT32_MIN && (P.b == Q.a || P.b == Q.b)) return P.b;
  return INT32_MIN;
}

struct NormalizedConstraint {
  Vec2 n;  // unit normal
  double c;
};

inline std::vector<TaggedVert> clip_tagged_box(
    std::span<const NormalizedConstraint> cs, double R) {
  std::vector<TaggedVert> poly = {
      {{-R, -R}, -4, -1}, {{R, -R}, -1, -2}, {{R, R}, -2, -3}, {{-R, R}, -3, -4}};
  std::vector<TaggedVert> out;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    out.clear();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const TaggedVert& P = poly[i];
      const TaggedVert& Q = poly[(i + 1) % n];
      const double dP = dot(cs[k].n, P.p) - cs[k].c;
      const double dQ = dot(cs[k].n, Q.p) - cs[k].c;
      const bool inP = dP >= 0.0, inQ = dQ >= 0.0;
      if (inP) out.push_back(P);
      if (inP != inQ) {
        const double t = dP / (dP - dQ);
        out.push_back({P.p + t * (Q.p - P.p), common_tag(P, Q), static_cast<int>(k)});
      }
    }
    poly.swap(out);
    if (poly.size() < 3) return {};
  }
  return poly;
}

}  // namespace detail

// Intersection of closed half-planes.  Bounded intersections come back as a
// ccw Polygon with vertices re-solved from their defining constraint pair,
// so the result does not inherit round-off from the clipping cascade.
// Intersections of area below 1e-14 are reported empty.
inline Region intersect_half_planes(std::span<const HalfPlane> hs) {
  if (hs.empty())
    throw std::invalid_argument("intersect_half_planes: no constraints");
  std::vector<detail::NormalizedConstraint> cs;
  cs.reserve(hs.size());
  for (const HalfPlane& h : hs) {
    const double len = norm(h.normal);
    if (len < 1e-300)
      throw std::invalid_argument("intersect_half_planes: zero normal");
    cs.push_back({(1.0 / len) * h.normal, h.offset / len});
  }

  // The intersection is bounded iff the normals positively span the plane,
  // i.e. every cyclic gap between normal directions is < pi.
  std::vector<double> ang;
  ang.reserve(cs.size());
  for (const auto& c : cs) ang.push_back(std::atan2(c.n.y, c.n.x));
  std::sort(ang.begin(), ang.end());
  double max_gap = ang.front() + 2.0 * std::numbers::pi - ang.back();
  for (std::size_t i = 0; i + 1 < ang.size(); ++i)
    max_gap = std::max(max_gap, ang[i + 1] - ang[i]);
  const bool maybe_unbounded = max_gap >= std::numbers::pi - 1e-9;

  double cmax = 0.0;
  for (const auto& c : cs) cmax = std::max(cmax, std::abs(c.c));
  double R = 1e6 * (1.0 + cmax);
  std::vector<detail::TaggedVert> tv = detail::clip_tagged_box(cs, R);
  if (tv.empty() && maybe_unbounded) {
    // a ray-shaped feasible set can start far out; retry before declaring empty
    tv = detail::clip_tagged_box(cs, R * 1e6);
  }
  if (tv.empty()) return {RegionKind::empty, {}};
  if (maybe_unbounded) return {RegionKind::unbounded, {}};

  Polygon poly;
  poly.v.reserve(tv.size());
  for (const auto& w : tv) {
    Vec2 q = w.p;
    if (w.a >= 0 && w.b >= 0 && w.a != w.b) {
      const HalfPlane& A = hs[static_cast<std::size_t>(w.a)];
      const HalfPlane& B = hs[static_cast<std::size_t>(w.b)];
      const double det = cross(A.normal, B.normal);
      if (std::abs(det) > 1e-12 * norm(A.normal) * norm(B.normal)) {
        q = {(A.offset * B.normal.y - B.offset * A.normal.y) / det,
             (A.normal.x * B.offset - B.normal.x * A.offset) / det};
      }
    }
    poly.v.push_back(q);
  }
  canonicalize_polygon(poly);
  if (poly.size() < 3 || polygon_area(poly) < 1e-14) return {RegionKind::empty, {}};
  return {RegionKind::polygon, std::move(poly)};
}

inline Region intersect_half_planes(const std::vector<HalfPlane>& hs) {
  return intersect_half_planes(std::span<const HalfPlane>(hs));
}

// ---------------------------------------------------------------------------
// densities and integration

// Nonnegative density with convex polygonal support; extended by zero outside
// the support.  kind selects an exact integration path where one exists.
struct Density {
  enum class Kind { constant, affine, general };
  Kind kind = Kind::constant;
  std::function<double(Vec2)> eval;
  Polygon support;

  static Density constant(double value, Polygon supp) {
    return {Kind::constant, [value](Vec2) { return value; }, std::move(supp)};
  }
  static Density affine(double a0, Vec2 slope, Polygon supp) {
    return {Kind::affine, [a0, slope](Vec2 p) { return a0 + dot(slope, p); },
            std::move(supp)};
  }
  static Density general(std::function<double(Vec2)> f, Polygon supp) {
    return {Kind::general, std::move(f), std::move(supp)};
  }
};

namespace detail {

struct TriQuadPoint {
  double l1, l2, l3, w;
};

// symmetric Gauss rules on the reference triangle, weights summing to 1
inline std::span<const TriQuadPoint> triangle_rule(int order) {
  static const TriQuadPoint deg1[] = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0}};
  static const TriQuadPoint deg2[] = {
      {2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 3}};
  static const TriQuadPoint deg3[] = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, -27.0 / 48},
      {0.6, 0.2, 0.2, 25.0 / 48},
      {0.2, 0.6, 0.2, 25.0 / 48},
      {0.2, 0.2, 0.6, 25.0 / 48}};
  static const TriQuadPoint deg5[] = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
      {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
      {0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506},
      {0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506},
      {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827},
      {0.101286507323456, 0.797426985353087, 0.101286507323456, 0.125939180544827},
      {0.101286507323456, 0.101286507323456, 0.797426985353087, 0.125939180544827}};
  static const TriQuadPoint deg7[] = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, -0.149570044467670},
      {0.479308067841923, 0.260345966079038, 0.260345966079038, 0.175615257433204},
      {0.260345966079038, 0.479308067841923, 0.260345966079038, 0.175615257433204},
      {0.260345966079038, 0.260345966079038, 0.479308067841923, 0.175615257433204},
      {0.869739794195568, 0.065130102902216, 0.065130102902216, 0.053347235608839},
      {0.065130102902216, 0.869739794195568, 0.065130102902216, 0.053347235608839},
      {0.065130102902216, 0.065130102902216, 0.869739794195568, 0.053347235608839},
      {0.638444188569809, 0.312865496004875, 0.048690315425316, 0.077113760890257},
      {0.638444188569809, 0.048690315425316, 0.312865496004875, 0.077113760890257},
      {0.312865496004875, 0.638444188569809, 0.048690315425316, 0.077113760890257},
      {0.312865496004875, 0.048690315425316, 0.638444188569809, 0.077113760890257},
      {0.048690315425316, 0.638444188569809, 0.312865496004875, 0.077113760890257},
      {0.048690315425316, 0.312865496004875, 0.638444188569809, 0.077113760890257}};
  if (order <= 1) return deg1;
  if (order == 2) return deg2;
  if (order == 3) return deg3;
  if (order <= 5) return deg5;
  return deg7;
}

}  // namespace detail

// Integral of rho over poly.  The region is clipped to supp(rho) first (rho
// is zero outside its support).  Constant and affine densities integrate
// exactly; general ones use a fan triangulation with a symmetric Gauss rule
// of the requested polynomial order.
inline double integrate_density(const Polygon& poly, const Density& rho,
                                int order = 5) {
  if (poly.size() < 3) return 0.0;
  const Polygon region = intersect_polygons(poly, rho.support);
  if (region.size() < 3) return 0.0;
  const double area = polygon_area(region);
  if (area <= 0.0) return 0.0;
  switch (rho.kind) {
    case Density::Kind::constant:
      return rho.eval(polygon_centroid(region)) * area;
    case Density::Kind::affine:
      // exact: the mean of an affine function over a region is its value at
      // the centroid
      return rho.eval(polygon_centroid(region)) * area;
    case Density::Kind::general: {
      const Vec2 c = polygon_centroid(region);
      const auto rule = detail::triangle_rule(order);
      double total = 0.0;
      const std::size_t n = region.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = region[i], b = region[(i + 1) % n];
        const double tri_area = 0.5 * cross(a - c, b - c);
        if (tri_area <= 0.0) continue;
        double s = 0.0;
        for (const auto& q : rule)
          s += q.w * rho.eval(q.l1 * c + q.l2 * a + q.l3 * b);
        total += s * tri_area;
      }
      return std::max(0.0, total);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// distances

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 e = b - a;
  const double l2 = norm2(e);
  if (l2 < 1e-300) return norm(p - a);
  const double t = std::clamp(dot(p - a, e) / l2, 0.0, 1.0);
  return norm(p - (a + t * e));
}

// Distance from p to the polygon viewed as a closed convex set.
inline double distance_to_polygon(Vec2 p, const Polygon& poly) {
  if (poly.empty()) throw std::invalid_argument("distance_to_polygon: empty");
  if (signed_distance_inside(poly, p) >= 0.0) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i)
    d = std::min(d, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
  return d;
}

// Hausdorff distance between convex polygons as compact sets.  For a convex
// target the distance function is convex, so the supremum over each set is
// attained at a vertex; vertex-to-set distances in both directions suffice.
inline double hausdorff_distance(const Polygon& a, const Polygon& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("hausdorff_distance: empty polygon");
  double d = 0.0;
  for (const Vec2& q : a.v) d = std::max(d, distance_to_polygon(q, b));
  for (const Vec2& q : b.v) d = std::max(d, distance_to_polygon(q, a));
  return d;
}

// Validate user-supplied vertex lists: at least 3 vertices, ccw, strictly
// convex within tolerance.  Throws std::invalid_argument.
inline void validate_polygon(const Polygon& p, const char* what) {
  if (p.size() < 3)
    throw std::invalid_argument(std::string(what) + ": needs at least 3 vertices");
  double scale = 1.0;
  for (const Vec2& q : p.v) scale = std::max({scale, std::abs(q.x), std::abs(q.y)});
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p[i], b = p[(i + 1) % n], c = p[(i + 2) % n];
    if (norm(b - a) <= 1e-12 * scale)
      throw std::invalid_argument(std::string(what) + ": duplicate vertices");
    if (cross(b - a, c - b) <= 1e-12 * scale * scale)
      throw std::invalid_argument(std::string(what) +
                                  ": vertices must be strictly convex ccw");
  }
}

}  // namespace ampere
