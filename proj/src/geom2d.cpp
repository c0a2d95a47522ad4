#include "swarmplan/geom2d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swarmplan {

namespace {

constexpr int kGjkMaxIterations = 64;
constexpr int kEpaMaxExpansions = 128;
constexpr double kImprovementTol = 1e-10;

bool all_finite(std::span<const Vec2> pts) {
  return std::all_of(pts.begin(), pts.end(), [](const Vec2& p) { return p.finite(); });
}

}  // namespace

ConvexShape ConvexShape::polygon(std::vector<Vec2> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  if (!all_finite(vertices)) throw std::invalid_argument("polygon vertex is not finite");
  double twice_area = 0.0;
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    const Vec2& c = vertices[(i + 2) % n];
    const Vec2 e1 = b - a;
    const Vec2 e2 = c - b;
    if (e1.squared_norm() == 0.0) throw std::invalid_argument("polygon has repeated vertices");
    if (e1.cross(e2) < 0.0) throw std::invalid_argument("polygon is not convex counter-clockwise");
    twice_area += a.cross(b);
    turning += std::atan2(e1.cross(e2), e1.dot(e2));
  }
  if (!(twice_area > 0.0)) throw std::invalid_argument("polygon has zero area");
  // A star polygon with only left turns winds more than once.
  if (std::fabs(turning - 2.0 * std::numbers::pi) > 1e-6) {
    throw std::invalid_argument("polygon winds more than once");
  }
  return ConvexShape(ShapeKind::kPolygon, std::move(vertices), 0.0);
}

ConvexShape ConvexShape::disk(Vec2 center, double radius) {
  if (!center.finite() || !std::isfinite(radius)) throw std::invalid_argument("disk is not finite");
  if (radius < 0.0) throw std::invalid_argument("disk radius must be >= 0");
  return ConvexShape(ShapeKind::kDisk, {center}, radius);
}

ConvexShape ConvexShape::point(Vec2 position) {
  if (!position.finite()) throw std::invalid_argument("point is not finite");
  return ConvexShape(ShapeKind::kPoint, {position}, 0.0);
}

ConvexShape ConvexShape::box(double xmin, double ymin, double xmax, double ymax) {
  return polygon({{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}});
}

Vec2 ConvexShape::center() const {
  Vec2 sum;
  for (const Vec2& v : vertices_) sum += v;
  return sum / static_cast<double>(vertices_.size());
}

ConvexShape ConvexShape::translated(Vec2 offset) const {
  std::vector<Vec2> moved = vertices_;
  for (Vec2& v : moved) v += offset;
  return ConvexShape(kind_, std::move(moved), radius_);
}

std::pair<Vec2, Vec2> ConvexShape::bounds() const {
  Vec2 lo = vertices_.front();
  Vec2 hi = vertices_.front();
  for (const Vec2& v : vertices_) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  return {lo - Vec2{radius_, radius_}, hi + Vec2{radius_, radius_}};
}

double ConvexShape::perimeter() const {
  switch (kind_) {
    case ShapeKind::kPoint:
      return 0.0;
    case ShapeKind::kDisk:
      return 2.0 * std::numbers::pi * radius_;
    case ShapeKind::kPolygon:
      break;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    total += (vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm();
  }
  return total;
}

Vec2 ConvexShape::boundary_point(double s) const {
  s = s - std::floor(s);
  switch (kind_) {
    case ShapeKind::kPoint:
      return vertices_.front();
    case ShapeKind::kDisk: {
      const double angle = 2.0 * std::numbers::pi * s;
      return vertices_.front() + Vec2{std::cos(angle), std::sin(angle)} * radius_;
    }
    case ShapeKind::kPolygon:
      break;
  }
  double remaining = s * perimeter();
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = vertices_[i];
    const Vec2 b = vertices_[(i + 1) % n];
    const double len = (b - a).norm();
    if (remaining <= len || i + 1 == n) {
      const double t = std::clamp(remaining / len, 0.0, 1.0);
      return a + (b - a) * t;
    }
    remaining -= len;
  }
  return vertices_.front();
}

Vec2 support(const ConvexShape& shape, Vec2 direction) {
  if (!direction.finite() || direction.squared_norm() == 0.0) {
    throw std::invalid_argument("support direction must be non-zero and finite");
  }
  const auto verts = shape.vertices();
  if (shape.kind() == ShapeKind::kDisk) {
    return verts.front() + direction / direction.norm() * shape.radius();
  }
  std::size_t best = 0;
  double best_dot = verts[0].dot(direction);
  for (std::size_t i = 1; i < verts.size(); ++i) {
    const double d = verts[i].dot(direction);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return verts[best];
}

namespace {

// A vertex of the Minkowski difference A - B with its generating points.
struct MinkowskiPoint {
  Vec2 w;
  Vec2 a;
  Vec2 b;
};

// Support of the difference of the shapes' cores (vertices only; radii are
// handled by the caller).
class CoreDifference {
 public:
  CoreDifference(std::span<const Vec2> a, std::span<const Vec2> b) : a_(a), b_(b) {}

  MinkowskiPoint support(Vec2 d) const {
    const Vec2 pa = extreme(a_, d);
    const Vec2 pb = extreme(b_, -d);
    return {pa - pb, pa, pb};
  }

  Vec2 interior_point() const { return mean(a_) - mean(b_); }

  std::vector<MinkowskiPoint> all_points() const {
    std::vector<MinkowskiPoint> out;
    for (const Vec2& pa : a_)
      for (const Vec2& pb : b_) out.push_back({pa - pb, pa, pb});
    return out;
  }

 private:
  static Vec2 extreme(std::span<const Vec2> pts, Vec2 d) {
    std::size_t best = 0;
    double best_dot = pts[0].dot(d);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double v = pts[i].dot(d);
      if (v > best_dot) {
        best_dot = v;
        best = i;
      }
    }
    return pts[best];
  }
  static Vec2 mean(std::span<const Vec2> pts) {
    Vec2 s;
    for (const Vec2& p : pts) s += p;
    return s / static_cast<double>(pts.size());
  }

  std::span<const Vec2> a_;
  std::span<const Vec2> b_;
};

// Outcome on the cores: distance is >= 0 when separated (or touching) and the
// negated depth when overlapping. `separation` is the unit direction in which
// the query must move to increase the distance.
struct CoreResult {
  double distance = 0.0;
  Vec2 witness_a;
  Vec2 witness_b;
  Vec2 separation{1.0, 0.0};
};

struct Simplex {
  std::array<MinkowskiPoint, 3> pts;
  int size = 0;
};

struct ClosestOnSimplex {
  Vec2 v;
  Vec2 a;
  Vec2 b;
  bool contains_origin = false;
};

ClosestOnSimplex closest_on_segment(Simplex& s, int i, int j) {
  const MinkowskiPoint p = s.pts[i];
  const MinkowskiPoint q = s.pts[j];
  const Vec2 e = q.w - p.w;
  const double len2 = e.squared_norm();
  double t = len2 > 0.0 ? std::clamp(-p.w.dot(e) / len2, 0.0, 1.0) : 0.0;
  if (t <= 0.0) {
    s.pts[0] = p;
    s.size = 1;
    return {p.w, p.a, p.b};
  }
  if (t >= 1.0) {
    s.pts[0] = q;
    s.size = 1;
    return {q.w, q.a, q.b};
  }
  s.pts[0] = p;
  s.pts[1] = q;
  s.size = 2;
  return {p.w + e * t, p.a + (q.a - p.a) * t, p.b + (q.b - p.b) * t};
}

// Reduces the simplex to the smallest subset supporting the closest point.
ClosestOnSimplex reduce(Simplex& s) {
  if (s.size == 1) return {s.pts[0].w, s.pts[0].a, s.pts[0].b};
  if (s.size == 2) return closest_on_segment(s, 0, 1);

  const Vec2 p0 = s.pts[0].w, p1 = s.pts[1].w, p2 = s.pts[2].w;
  const double area = (p1 - p0).cross(p2 - p0);
  if (area != 0.0) {
    const double c0 = (p1).cross(p2);
    const double c1 = (p2).cross(p0);
    const double c2 = (p0).cross(p1);
    const bool inside = area > 0.0 ? (c0 >= 0.0 && c1 >= 0.0 && c2 >= 0.0)
                                   : (c0 <= 0.0 && c1 <= 0.0 && c2 <= 0.0);
    if (inside) {
      ClosestOnSimplex r;
      r.v = {0.0, 0.0};
      r.contains_origin = true;
      return r;
    }
  }
  // Origin outside the triangle: the closest point lies on one of its edges.
  ClosestOnSimplex best;
  Simplex best_simplex;
  double best_d2 = std::numeric_limits<double>::infinity();
  constexpr std::array<std::array<int, 2>, 3> edges{{{0, 1}, {1, 2}, {2, 0}}};
  for (const auto& e : edges) {
    Simplex trial = s;
    const ClosestOnSimplex c = closest_on_segment(trial, e[0], e[1]);
    const double d2 = c.v.squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
      best_simplex = trial;
    }
  }
  s = best_simplex;
  return best;
}

// Convex hull (counter-clockwise, no collinear points) of Minkowski points.
std::vector<MinkowskiPoint> hull(std::vector<MinkowskiPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const MinkowskiPoint& l, const MinkowskiPoint& r) {
    return l.w.x < r.w.x || (l.w.x == r.w.x && l.w.y < r.w.y);
  });
  if (pts.size() < 3) return pts;
  std::vector<MinkowskiPoint> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && (h[k - 1].w - h[k - 2].w).cross(p.w - h[k - 2].w) <= 0.0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && (h[k - 1].w - h[k - 2].w).cross(pts[i].w - h[k - 2].w) <= 0.0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

// Closest boundary edge of a counter-clockwise polygon containing the origin;
// grows the polygon by support points until the edge is final.
CoreResult expand_polytope(const CoreDifference& diff, std::vector<MinkowskiPoint> poly,
                           bool allow_expansion) {
  CoreResult out;
  for (int iter = 0;; ++iter) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    Vec2 best_normal;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 e = poly[(i + 1) % poly.size()].w - poly[i].w;
      const double len = e.norm();
      if (len == 0.0) continue;
      const Vec2 n{e.y / len, -e.x / len};
      const double d = n.dot(poly[i].w);
      if (d < best_dist) {
        best_dist = d;
        best = i;
        best_normal = n;
      }
    }
    const MinkowskiPoint& p = poly[best];
    const MinkowskiPoint& q = poly[(best + 1) % poly.size()];
    bool done = !allow_expansion || iter >= kEpaMaxExpansions;
    MinkowskiPoint fresh;
    if (!done) {
      fresh = diff.support(best_normal);
      done = best_normal.dot(fresh.w) - best_dist < kImprovementTol;
    }
    if (done) {
      const Vec2 e = q.w - p.w;
      const Vec2 foot = best_normal * best_dist;
      const double t = std::clamp((foot - p.w).dot(e) / e.squared_norm(), 0.0, 1.0);
      out.distance = -std::max(best_dist, 0.0);
      out.witness_a = p.a + (q.a - p.a) * t;
      out.witness_b = p.b + (q.b - p.b) * t;
      out.separation = -best_normal;
      return out;
    }
    poly.insert(poly.begin() + static_cast<std::ptrdiff_t>(best) + 1, fresh);
  }
}

CoreResult penetration_from_hull(const CoreDifference& diff) {
  std::vector<MinkowskiPoint> h = hull(diff.all_points());
  if (h.size() < 3) {
    // Both cores are single points (or collinear): coincident points.
    CoreResult r;
    r.witness_a = diff.all_points().front().a;
    r.witness_b = diff.all_points().front().b;
    return r;
  }
  return expand_polytope(diff, std::move(h), false);
}

CoreResult core_signed_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
  const CoreDifference diff(a, b);
  Simplex simplex;
  Vec2 v = diff.interior_point();
  if (v.squared_norm() == 0.0) v = {1.0, 0.0};
  ClosestOnSimplex closest;
  double prev_norm = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < kGjkMaxIterations; ++iter) {
    const MinkowskiPoint w = diff.support(-v);
    if (simplex.size > 0) {
      // Converged: the new support point does not move the lower bound.
      const double gap = v.squared_norm() - v.dot(w.w);
      if (gap <= 1e-12 * std::max(1.0, v.squared_norm())) break;
      bool repeated = false;
      for (int i = 0; i < simplex.size; ++i) repeated = repeated || simplex.pts[i].w == w.w;
      if (repeated) break;
    }
    simplex.pts[simplex.size++] = w;
    closest = reduce(simplex);
    if (closest.contains_origin) {
      std::vector<MinkowskiPoint> tri(simplex.pts.begin(), simplex.pts.end());
      if ((tri[1].w - tri[0].w).cross(tri[2].w - tri[0].w) < 0.0) std::swap(tri[1], tri[2]);
      return expand_polytope(diff, std::move(tri), true);
    }
    v = closest.v;
    const double norm = v.norm();
    if (norm == 0.0) return penetration_from_hull(diff);  // touching
    if (prev_norm - norm < kImprovementTol) break;
    prev_norm = norm;
  }

  CoreResult out;
  out.distance = v.norm();
  out.witness_a = closest.a;
  out.witness_b = closest.b;
  out.separation = v / out.distance;
  return out;
}

}  // namespace

SdfResult signed_distance(const ConvexShape& query, const ConvexShape& obstacle) {
  const CoreResult core = core_signed_distance(query.vertices(), obstacle.vertices());
  SdfResult out;
  out.signed_distance = core.distance - query.radius() - obstacle.radius();
  out.closest_point_on_obstacle = core.witness_b + core.separation * obstacle.radius();
  out.closest_point_on_query = core.witness_a - core.separation * query.radius();
  out.contact_normal = -core.separation;
  return out;
}

}  // namespace swarmplan
